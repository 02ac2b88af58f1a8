/*
   Copyright 2026 The sderk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "sderk/convergence.hpp"

using namespace sderk;

TEST(GbmExact, ClosedForms) {
    EXPECT_EQ(gbm_exact(2.5, 0.3, 0.7, 0.0, 0.0), 2.5);
    EXPECT_NEAR(gbm_exact(1.0, 0.2, 0.0, 3.0, 1.7), std::exp(0.6), 1e-15);
    EXPECT_NEAR(gbm_exact(1.0, 0.0, 1.0, 1.0, 0.0), 0.6065306597, 1e-10);
    const auto p = gbm_system(0.1, 0.2);
    const std::vector<double> x0{3.0}, w{0.0};
    EXPECT_EQ(p.exact(x0, 0.0, w)[0], 3.0);
}

TEST(FitSlope, ExactPowerLaws) {
    const std::vector<std::pair<double, double>> sq{{1, 1}, {0.5, 0.25}, {0.25, 0.0625}};
    EXPECT_NEAR(fit_loglog_slope(sq).slope, 2.0, 1e-12);
    EXPECT_NEAR(fit_loglog_slope(sq).half_width, 0.0, 1e-6);
    std::vector<std::pair<double, double>> c2;
    for (int k = 0; k < 6; ++k) {
        const double h = std::ldexp(1.0, -k);
        c2.emplace_back(h, 3.7 * h * h);
    }
    EXPECT_NEAR(fit_loglog_slope(c2).slope, 2.0, 1e-12);
}

TEST(FitSlope, TooFewPoints) {
    const std::vector<std::pair<double, double>> two{{1, 1}, {0.5, 0.5}};
    EXPECT_THROW(fit_loglog_slope(two), PreconditionError);
    const std::vector<std::pair<double, double>> bad{{1, 1}, {0.5, 0.0}, {0.25, 0.1}};
    EXPECT_THROW(fit_loglog_slope(bad), PreconditionError);
}

TEST(FitSlope, NoisyCubicLaw) {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> noise(0.95, 1.05);
    std::vector<std::pair<double, double>> pts;
    for (int k = 1; k <= 8; ++k) {
        const double h = std::ldexp(1.0, -k);
        pts.emplace_back(h, h * h * h * noise(gen));
    }
    const auto fit = fit_loglog_slope(pts);
    EXPECT_GE(fit.slope, 2.7);
    EXPECT_LE(fit.slope, 3.3);
    EXPECT_GT(fit.half_width, 0.0);
}

TEST(StrongError, DeterministicLimitRecoversOdeOrder) {
    // sigma = 0: the harness must measure the classical order of RK4.
    StrongErrorOptions opt;
    opt.paths = 2;
    const auto rep = strong_error(gbm_system(1.0, 0.0), builtin_rk4(), {0.25, 0.125, 0.0625, 0.03125}, opt);
    ASSERT_TRUE(rep.fit);
    EXPECT_NEAR(rep.fit->slope, 4.0, 0.3);
}

TEST(StrongError, Rk4LiftedIsOrderTwo) {
    StrongErrorOptions opt;
    opt.paths = 500;
    opt.seed = 3;
    std::vector<double> hs;
    for (int k = 4; k <= 8; ++k) hs.push_back(std::ldexp(1.0, -k));
    const auto rep = strong_error(gbm_system(0.06, 0.5), builtin_rk4(), hs, opt);
    ASSERT_TRUE(rep.fit);
    EXPECT_NEAR(rep.fit->slope, 2.0, 0.3);
    for (std::size_t i = 1; i < rep.points.size(); ++i) EXPECT_LT(rep.points[i].h, rep.points[i - 1].h);
}

TEST(StrongError, WorkersDoNotChangeReport) {
    StrongErrorOptions opt;
    opt.paths = 50;
    opt.seed = 1;
    const std::vector<double> hs{0.25, 0.125, 0.0625};
    const auto a = strong_error(gbm_system(0.06, 0.5), builtin_rk4(), hs, opt);
    opt.workers = 4;
    const auto b = strong_error(gbm_system(0.06, 0.5), builtin_rk4(), hs, opt);
    for (std::size_t i = 0; i < hs.size(); ++i) EXPECT_EQ(a.points[i].mean_error, b.points[i].mean_error);
}

TEST(StrongError, FloorPointsAreExcluded) {
    // Exact for additive noise with zero drift: every error sits at the rounding floor.
    AnalyticSde p;
    p.system = ou_system(0.0, 1.0);
    p.exact = [](std::span<const double> x0, double, std::span<const double> w) {
        return State{x0[0] + w[0]};
    };
    StrongErrorOptions opt;
    opt.paths = 20;
    const auto rep = strong_error(p, builtin_rk4(), {0.5, 0.25, 0.125}, opt);
    for (const auto& pt : rep.points) EXPECT_FALSE(pt.used_in_fit);
    EXPECT_FALSE(rep.fit);
    std::ostringstream os;
    write_order_csv(os, rep);
    EXPECT_NE(os.str().find("h,mean_error,n_paths\n"), std::string::npos);
    EXPECT_NE(os.str().find("slope=nan"), std::string::npos);
}

TEST(StrongError, RejectsNonNestedSteps) {
    StrongErrorOptions opt;
    opt.paths = 1;
    EXPECT_THROW(strong_error(gbm_system(0, 1), builtin_rk4(), {0.5, 0.3}, opt), PreconditionError);
    EXPECT_THROW(strong_error(gbm_system(0, 1), builtin_rk4(), {0.5, 0.375}, opt), PreconditionError);
    EXPECT_THROW(strong_error(gbm_system(0, 1), builtin_rk4(), {}, opt), PreconditionError);
}

TEST(OrnsteinUhlenbeck, MeanDecays) {
    const auto sys = ou_system(1.5, 0.3);
    const std::vector<double> x0{2.0};
    RngStream rng(4, 0);
    double sum = 0.0;
    const int n = 4000;
    std::vector<double> vals;
    for (int p = 0; p < n; ++p) {
        RngStream r(4, static_cast<std::uint64_t>(p));
        BrownianStack st(0.0, 0.25, 1);
        StepController c;
        c.base_step = 0.25;
        c.fixed_level = 2;
        const auto path = integrate_path(sys, builtin_rk4(), c, st, r, x0, 0.0, 1.0);
        sum += path.x.back()[0];
        vals.push_back(path.x.back()[0]);
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (n - 1) / n);
    EXPECT_LE(std::abs(mean - ou_mean(2.0, 1.5, 1.0)), 4.0 * se + 1e-6);
}

TEST(Csv, SeventeenSignificantDigits) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(format_double(1e-20), "9.9999999999999995e-21");
}
