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

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sderk/brownian.hpp"
#include "sderk/csv.hpp"
#include "sderk/error.hpp"
#include "sderk/parallel.hpp"
#include "sderk/rng.hpp"
#include "sderk/sde_system.hpp"
#include "sderk/stepper.hpp"
#include "sderk/tableau.hpp"

namespace sderk {

/// SDE whose strong solution is an explicit function of (x0, t, W_t).
struct AnalyticSde {
    SdeSystem system;
    std::function<State(std::span<const double> x0, double t, std::span<const double> W)> exact;
};

inline double gbm_exact(double x0, double mu, double sigma, double t, double W) {
    return x0 * std::exp((mu - 0.5 * sigma * sigma) * t + sigma * W);
}

/// dX = mu X dt + sigma X dW.
inline AnalyticSde gbm_system(double mu, double sigma) {
    AnalyticSde p;
    p.system.n = 1;
    p.system.m = 1;
    p.system.name = "gbm";
    p.system.drift = [mu](std::span<const double> x, double, std::span<double> out) {
        out[0] = mu * x[0];
    };
    p.system.diffusion = [sigma](std::span<const double> x, double, std::span<double> out) {
        out[0] = sigma * x[0];
    };
    p.system.diffusion_jacobian = [sigma](std::span<const double>, double, std::span<double> out) {
        out[0] = sigma;
    };
    p.exact = [mu, sigma](std::span<const double> x0, double t, std::span<const double> W) {
        return State{gbm_exact(x0[0], mu, sigma, t, W[0])};
    };
    return p;
}

/// dX = -lambda X dt + sigma dW; only its mean x0 e^(-lambda t) is used as a check.
inline SdeSystem ou_system(double lambda, double sigma) {
    SdeSystem s;
    s.n = 1;
    s.m = 1;
    s.name = "ornstein-uhlenbeck";
    s.drift = [lambda](std::span<const double> x, double, std::span<double> out) {
        out[0] = -lambda * x[0];
    };
    s.diffusion = [sigma](std::span<const double>, double, std::span<double> out) {
        out[0] = sigma;
    };
    s.diffusion_jacobian = [](std::span<const double>, double, std::span<double> out) {
        out[0] = 0.0;
    };
    return s;
}

inline double ou_mean(double x0, double lambda, double t) { return x0 * std::exp(-lambda * t); }

struct SlopeFit {
    double slope = 0.0;
    double half_width = 0.0; // twice the standard error of the slope
};

/// Ordinary least squares of log(err) on log(h).
inline SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) {
        throw PreconditionError("slope fit needs at least 3 points, got "
                                + std::to_string(points.size()));
    }
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [h, e] : points) {
        if (!(h > 0.0) || !(e > 0.0)) throw PreconditionError("slope fit needs positive values");
        sx += std::log(h);
        sy += std::log(e);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [h, e] : points) {
        const double dx = std::log(h) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e) - my);
    }
    if (!(sxx > 0.0)) throw PreconditionError("slope fit needs distinct h values");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    const double icpt = my - fit.slope * mx;
    double rss = 0.0;
    for (const auto& [h, e] : points) {
        const double r = std::log(e) - (icpt + fit.slope * std::log(h));
        rss += r * r;
    }
    fit.half_width = points.size() > 2 ? 2.0 * std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    return fit;
}

struct OrderPoint {
    double h = 0.0;
    double mean_error = 0.0;
    std::size_t n_paths = 0;
    bool used_in_fit = true;
};

struct OrderReport {
    std::vector<OrderPoint> points; // decreasing h
    std::optional<SlopeFit> fit;    // absent when fewer than 3 points survive
};

struct StrongErrorOptions {
    std::size_t paths = 2000;
    std::uint64_t seed = 0;
    double T = 1.0;
    State x0{1.0};
    unsigned workers = 1;
    double min_error = 10.0 * std::numeric_limits<double>::epsilon();
    double max_error = std::numeric_limits<double>::infinity();
};

/// Mean absolute terminal error E|X_T^num - X_T^exact| for each fixed step h.
///
/// Every h must divide T into a power-of-two multiple of the smallest step.
/// Each path draws its increments on the finest grid once; coarser increments
/// are exact fixed-point sums of them, so all step sizes see the same path.
/// Points with mean error outside [min_error, max_error] are reported but
/// left out of the fit.
inline OrderReport strong_error(const AnalyticSde& problem, const ButcherTableau& tab,
                                std::vector<double> h_list, const StrongErrorOptions& opt) {
    const SdeSystem& sys = problem.system;
    if (h_list.empty()) throw PreconditionError("no step sizes given");
    if (opt.paths < 1) throw PreconditionError("strong_error needs at least one path");
    detail::check_state(sys, opt.x0);
    std::sort(h_list.begin(), h_list.end(), std::greater<>());
    const double h_min = h_list.back();
    const std::int64_t fine_steps = chunk_count(0.0, opt.T, h_min);
    std::vector<std::int64_t> stride(h_list.size());
    for (std::size_t j = 0; j < h_list.size(); ++j) {
        const double r = h_list[j] / h_min;
        const auto ri = static_cast<std::int64_t>(std::nearbyint(r));
        if (ri < 1 || static_cast<double>(ri) != r || !std::has_single_bit(static_cast<std::uint64_t>(ri))
            || fine_steps % ri != 0) {
            throw PreconditionError("step sizes must be nested dyadic divisors of T");
        }
        stride[j] = ri;
    }

    const std::size_t H = h_list.size(), m = sys.m, n = sys.n;
    std::vector<double> errors(opt.paths * H);
    parallel_for(opt.paths, opt.workers, [&](std::size_t p) {
        RngStream rng(opt.seed, p);
        const double scale = std::sqrt(h_min);
        std::vector<WienerAmount> fine(static_cast<std::size_t>(fine_steps) * m);
        for (auto& w : fine) w = WienerAmount::from_double(scale * rng.normal());
        std::vector<WienerAmount> total(m);
        for (std::int64_t s = 0; s < fine_steps; ++s) {
            for (std::size_t k = 0; k < m; ++k) total[k] = total[k] + fine[s * m + k];
        }
        std::vector<double> W(m);
        for (std::size_t k = 0; k < m; ++k) W[k] = total[k].to_double();
        const State exact = problem.exact(opt.x0, opt.T, W);

        StepWorkspace ws;
        State y(n), y_next(n);
        std::vector<double> dW(m);
        for (std::size_t j = 0; j < H; ++j) {
            std::copy(opt.x0.begin(), opt.x0.end(), y.begin());
            const std::int64_t steps = fine_steps / stride[j];
            for (std::int64_t s = 0; s < steps; ++s) {
                for (std::size_t k = 0; k < m; ++k) {
                    WienerAmount acc;
                    for (std::int64_t f = s * stride[j]; f < (s + 1) * stride[j]; ++f) {
                        acc = acc + fine[f * m + k];
                    }
                    dW[k] = acc.to_double();
                }
                rk_step(tab, sys, y, static_cast<double>(s) * h_list[j], h_list[j], dW, y_next,
                        {}, ws);
                y.swap(y_next);
            }
            double e2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) e2 += (y[i] - exact[i]) * (y[i] - exact[i]);
            errors[p * H + j] = std::sqrt(e2);
        }
    });

    OrderReport rep;
    std::vector<std::pair<double, double>> used;
    for (std::size_t j = 0; j < H; ++j) {
        double sum = 0.0;
        for (std::size_t p = 0; p < opt.paths; ++p) sum += errors[p * H + j];
        OrderPoint pt{h_list[j], sum / static_cast<double>(opt.paths), opt.paths, true};
        pt.used_in_fit = pt.mean_error >= opt.min_error && pt.mean_error <= opt.max_error;
        if (pt.used_in_fit) used.emplace_back(pt.h, pt.mean_error);
        rep.points.push_back(pt);
    }
    if (used.size() >= 3) rep.fit = fit_loglog_slope(used);
    return rep;
}

inline std::string summary_line(const OrderReport& rep) {
    if (!rep.fit) return "slope=nan halfwidth=nan";
    return "slope=" + format_double(rep.fit->slope) + " halfwidth=" + format_double(rep.fit->half_width);
}

/// CSV with columns h,mean_error,n_paths; excluded points and the fit summary
/// follow as `#` comment lines.
inline void write_order_csv(std::ostream& os, const OrderReport& rep) {
    os << "h,mean_error,n_paths\n";
    for (const auto& p : rep.points) {
        os << format_double(p.h) << ',' << format_double(p.mean_error) << ',' << p.n_paths << '\n';
    }
    for (const auto& p : rep.points) {
        if (!p.used_in_fit) os << "# excluded from fit: h=" << format_double(p.h) << '\n';
    }
    os << "# " << summary_line(rep) << '\n';
}

} // namespace sderk
