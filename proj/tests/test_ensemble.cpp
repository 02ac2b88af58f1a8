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
#include <vector>

#include <gtest/gtest.h>

#include "sderk/ensemble.hpp"

using namespace sderk;

namespace {

SdeSystem gbm(double mu, double sigma) {
    SdeSystem s;
    s.n = 1;
    s.m = 1;
    s.name = "gbm";
    s.drift = [mu](std::span<const double> x, double, std::span<double> o) { o[0] = mu * x[0]; };
    s.diffusion = [sigma](std::span<const double> x, double, std::span<double> o) { o[0] = sigma * x[0]; };
    s.diffusion_jacobian = [sigma](std::span<const double>, double, std::span<double> o) { o[0] = sigma; };
    return s;
}

const ButcherTableau& pair87() {
    static const auto t = load_tableau_file(SDERK_DATA_DIR "/tableaus/dp87.tab");
    return t;
}

StepController controller(double H) {
    StepController c;
    c.rtol = 1e-8;
    c.atol = 1e-10;
    c.base_step = H;
    return c;
}

const std::vector<Observable> identity{{"x", [](std::span<const double> x) { return x[0]; }}};

} // namespace

TEST(Ensemble, DeterministicSystemHasZeroSpread) {
    const auto sys = gbm(0.5, 0.0);
    const std::vector<double> x0{1.0};
    EnsembleOptions opt;
    opt.trajectories = 4;
    const auto r = run_ensemble(sys, pair87(), controller(0.5), identity, {0.0, 0.5, 1.0}, x0, 0.0, opt);
    ASSERT_TRUE(r.observables[0].standard_error);
    EXPECT_EQ(r.observables[0].mean[0], 1.0);
    EXPECT_NEAR(r.observables[0].mean[2], std::exp(0.5), 1e-8);
    for (double se : *r.observables[0].standard_error) EXPECT_EQ(se, 0.0);
}

TEST(Ensemble, SingleTrajectoryHasNoStandardError) {
    const std::vector<double> x0{1.0};
    EnsembleOptions opt;
    opt.trajectories = 1;
    const auto r = run_ensemble(gbm(0.0, 0.3), pair87(), controller(1.0), identity, {0.0, 1.0}, x0, 0.0, opt);
    EXPECT_FALSE(r.observables[0].standard_error);
}

TEST(Ensemble, WorkerCountDoesNotChangeResults) {
    const std::vector<double> x0{1.0};
    auto run = [&](unsigned workers) {
        EnsembleOptions opt;
        opt.master_seed = 17;
        opt.trajectories = 64;
        opt.workers = workers;
        return run_ensemble(gbm(0.1, 0.6), pair87(), controller(0.25), identity, {0.0, 0.5, 1.0}, x0,
                            0.0, opt);
    };
    const auto a = run(1), b = run(4), c = run(16);
    EXPECT_EQ(a.observables[0].mean, b.observables[0].mean);
    EXPECT_EQ(a.observables[0].mean, c.observables[0].mean);
    EXPECT_EQ(*a.observables[0].standard_error, *c.observables[0].standard_error);
    EXPECT_EQ(a.totals.accepted, c.totals.accepted);
}

TEST(Ensemble, GbmMeanWithinStatisticalError) {
    // E[X_t] = e^(mu t).
    const std::vector<double> x0{1.0};
    EnsembleOptions opt;
    opt.master_seed = 3;
    opt.trajectories = 4000;
    const auto r = run_ensemble(gbm(0.2, 0.4), pair87(), controller(0.5), identity, {0.0, 0.5, 1.0},
                                x0, 0.0, opt);
    for (std::size_t g = 1; g < 3; ++g) {
        const double t = 0.5 * g;
        EXPECT_LE(std::abs(r.observables[0].mean[g] - std::exp(0.2 * t)),
                  4.0 * (*r.observables[0].standard_error)[g]);
    }
}

TEST(Ensemble, StandardErrorScalesAsInverseRootN) {
    const std::vector<double> x0{1.0};
    EnsembleOptions small, large;
    small.master_seed = large.master_seed = 5;
    small.trajectories = 1000;
    large.trajectories = 4000;
    large.first_index = 1000;
    const auto sys = gbm(0.0, 0.5);
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const auto rs = run_ensemble(sys, pair87(), controller(0.5), identity, grid, x0, 0.0, small);
    const auto rl = run_ensemble(sys, pair87(), controller(0.5), identity, grid, x0, 0.0, large);
    const auto ratio = standard_error_scaling_check(rs, rl);
    EXPECT_EQ(ratio[0], 1.0);
    for (std::size_t g = 1; g < 3; ++g) {
        EXPECT_GE(ratio[g], 1.7);
        EXPECT_LE(ratio[g], 2.3);
    }
    EXPECT_THROW(standard_error_scaling_check(rs, rs), PreconditionError);
}

TEST(Ensemble, FailureReportsLowestTrajectoryIndex) {
    SdeSystem s = gbm(0.0, 1.0);
    // Blows up once the path exceeds 2: some trajectories fail.
    s.drift = [](std::span<const double> x, double, std::span<double> o) {
        o[0] = x[0] > 2.0 ? NAN : 0.0;
    };
    StepController c = controller(1.0);
    c.fixed_level = 4;
    const std::vector<double> x0{1.0};
    std::size_t first = 0;
    for (unsigned workers : {1u, 3u}) {
        EnsembleOptions opt;
        opt.master_seed = 2;
        opt.trajectories = 200;
        opt.workers = workers;
        try {
            run_ensemble(s, pair87(), c, identity, {0.0, 1.0, 2.0}, x0, 0.0, opt);
            FAIL() << "expected a trajectory failure";
        } catch (const TrajectoryError& e) {
            if (workers == 1) first = e.index();
            EXPECT_EQ(e.index(), first);
        }
    }
}

TEST(Ensemble, SeedOffsetMatchesSubrange) {
    const std::vector<double> x0{1.0};
    EnsembleOptions all, tail;
    all.master_seed = tail.master_seed = 9;
    all.trajectories = 2;
    tail.trajectories = 1;
    tail.first_index = 1;
    all.workers = tail.workers = 1;
    const std::vector<Observable> obs = identity;
    // Mean of two = average of trajectory 0 and trajectory 1.
    EnsembleOptions head = tail;
    head.first_index = 0;
    const auto sys = gbm(0.0, 0.7);
    const std::vector<double> grid{0.0, 1.0};
    const auto ra = run_ensemble(sys, pair87(), controller(1.0), obs, grid, x0, 0.0, all);
    const auto rh = run_ensemble(sys, pair87(), controller(1.0), obs, grid, x0, 0.0, head);
    const auto rt = run_ensemble(sys, pair87(), controller(1.0), obs, grid, x0, 0.0, tail);
    EXPECT_DOUBLE_EQ(ra.observables[0].mean[1], (rh.observables[0].mean[1] + rt.observables[0].mean[1]) / 2);
}

TEST(Ensemble, Preconditions) {
    const std::vector<double> x0{1.0};
    EnsembleOptions opt;
    opt.trajectories = 0;
    EXPECT_THROW(run_ensemble(gbm(0, 0), pair87(), controller(1.0), identity, {0.0, 1.0}, x0, 0.0, opt),
                 PreconditionError);
    opt.trajectories = 1;
    EXPECT_THROW(run_ensemble(gbm(0, 0), pair87(), controller(1.0), identity, {}, x0, 0.0, opt),
                 PreconditionError);
    EXPECT_THROW(run_ensemble(gbm(0, 0), pair87(), controller(1.0), identity, {0.0, 1.0, 0.5}, x0, 0.0, opt),
                 PreconditionError);
    EXPECT_THROW(run_ensemble(gbm(0, 0), pair87(), controller(1.0), identity, {0.0, 0.7}, x0, 0.0, opt),
                 PreconditionError);
}
