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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sderk/brownian.hpp"
#include "sderk/error.hpp"
#include "sderk/rng.hpp"
#include "sderk/sde_system.hpp"
#include "sderk/tableau.hpp"

namespace sderk {

/// Tolerances and dyadic step policy.
///
/// Steps are H / 2^k with k in [min_level, max_level]. A rejected step is
/// halved; an accepted step whose error is below safety * 2^-(q_sde + 1)
/// is doubled for the next attempt.
struct StepController {
    double rtol = 1e-6;
    double atol = 1e-9;
    double base_step = 1.0; // H
    int min_level = 0;
    int max_level = default_max_depth;
    double safety = 0.8;
    int max_rejects = 60;
    std::optional<int> fixed_level; // fixed-step mode when set

    void validate() const {
        if (!(rtol >= 0.0) || !(atol >= 0.0) || !(rtol + atol > 0.0)) {
            throw PreconditionError("tolerances must be non-negative with rtol + atol > 0");
        }
        if (!(base_step > 0.0)) throw PreconditionError("base step must be positive");
        if (min_level < 0 || max_level < min_level || max_level > 52) {
            throw PreconditionError("dyadic levels must satisfy 0 <= min_level <= max_level <= 52");
        }
        if (fixed_level && (*fixed_level < 0 || *fixed_level > max_level)) {
            throw PreconditionError("fixed level outside [0, max_level]");
        }
        if (max_rejects < 0) throw PreconditionError("max_rejects must be non-negative");
    }
};

/// Outcome of one attempted step, handed to path observers.
struct StepReport {
    double t_new = 0.0;
    std::span<const double> y_new;
    double err = 0.0;
    bool accepted = false;
    double dt_used = 0.0;
    std::int64_t tick = 0; // position after the step when accepted
};

struct PathCounters {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t f_evals = 0;
};

struct SolutionPath {
    std::vector<double> t;
    std::vector<State> x;
    PathCounters counters;
};

struct StepWorkspace {
    std::vector<double> k; // stages * n, stage s at [s*n, (s+1)*n)
    State stage_state;
    IncrementWorkspace inc;

    void resize(std::size_t stages, std::size_t n) {
        k.resize(stages * n);
        stage_state.resize(n);
    }
};

/// One explicit Runge-Kutta step on the effective increment.
///
/// Every stage sees the full-step (dt, dW); only the state and time
/// arguments move. `y_low` is filled when the tableau is embedded and the
/// span is non-empty.
inline void rk_step(const ButcherTableau& tab, const SdeSystem& sys, std::span<const double> x,
                    double t, double dt, std::span<const double> dW, std::span<double> y_high,
                    std::span<double> y_low, StepWorkspace& ws) {
    const std::size_t n = sys.n, s = tab.stages();
    if (x.size() != n || y_high.size() != n) throw DimensionError("rk_step state size mismatch");
    if (dW.size() != sys.m) throw DimensionError("rk_step increment size mismatch");
    ws.resize(s, n);

    for (std::size_t st = 0; st < s; ++st) {
        std::copy(x.begin(), x.end(), ws.stage_state.begin());
        for (std::size_t r = 0; r < st; ++r) {
            const double coef = tab.a[st][r];
            if (coef == 0.0) continue;
            const double* kr = ws.k.data() + r * n;
            for (std::size_t i = 0; i < n; ++i) ws.stage_state[i] += coef * kr[i];
        }
        try {
            effective_increment(sys, ws.stage_state, t + tab.c[st] * dt, dt, dW,
                                std::span<double>(ws.k.data() + st * n, n), ws.inc);
        } catch (const EvaluationError& e) {
            throw EvaluationError("stage " + std::to_string(st + 1) + ": " + e.what());
        }
    }

    auto combine = [&](const std::vector<double>& w, std::span<double> out) {
        std::copy(x.begin(), x.end(), out.begin());
        for (std::size_t st = 0; st < s; ++st) {
            if (w[st] == 0.0) continue;
            const double* ks = ws.k.data() + st * n;
            for (std::size_t i = 0; i < n; ++i) out[i] += w[st] * ks[i];
        }
    };
    combine(tab.b, y_high);
    if (tab.b_hat && !y_low.empty()) {
        if (y_low.size() != n) throw DimensionError("rk_step embedded state size mismatch");
        combine(*tab.b_hat, y_low);
    }
}

struct StepResult {
    State y_high;
    std::optional<State> y_low;
};

inline StepResult rk_step(const ButcherTableau& tab, const SdeSystem& sys,
                          std::span<const double> x, double t, const IncrementNode& node) {
    StepResult r{State(sys.n), std::nullopt};
    if (tab.b_hat) r.y_low = State(sys.n);
    StepWorkspace ws;
    const auto dW = node.dW_values();
    rk_step(tab, sys, x, t, node.dt(), dW, r.y_high,
            r.y_low ? std::span<double>(*r.y_low) : std::span<double>(), ws);
    return r;
}

/// Mixed absolute/relative RMS norm of the embedded difference; accept iff <= 1.
inline double error_norm(std::span<const double> y_high, std::span<const double> y_low,
                         std::span<const double> y_prev, const StepController& ctrl) {
    if (y_high.size() != y_low.size() || y_high.size() != y_prev.size()) {
        throw DimensionError("error_norm operands differ in size");
    }
    if (y_high.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < y_high.size(); ++i) {
        const double scale =
            ctrl.atol + ctrl.rtol * std::max(std::abs(y_prev[i]), std::abs(y_high[i]));
        const double r = (y_high[i] - y_low[i]) / scale;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(y_high.size()));
}

/// Number of base steps H in [t0, T]; throws unless T - t0 is a positive multiple of H.
inline std::int64_t chunk_count(double t0, double T, double base_step) {
    if (!(T > t0)) throw PreconditionError("integration horizon must satisfy T > t0");
    const double ratio = (T - t0) / base_step;
    const double rounded = std::nearbyint(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
        throw PreconditionError("T - t0 must be an integer multiple of the base step");
    }
    return static_cast<std::int64_t>(rounded);
}

/// Integrates one trajectory from t0 to T over the Brownian tree in `stack`.
///
/// `observer(const StepReport&)` sees every attempted step, accepted or not.
template <class Observer>
PathCounters integrate_path(const SdeSystem& sys, const ButcherTableau& tab,
                            const StepController& ctrl, BrownianStack& stack, RngStream& rng,
                            std::span<const double> y0, double t0, double T,
                            Observer&& observer) {
    ctrl.validate();
    detail::check_state(sys, y0);
    const bool fixed = ctrl.fixed_level.has_value();
    if (!fixed && !tab.embedded()) {
        throw PreconditionError("tableau '" + tab.name
                                + "' has no embedded weights; use fixed-step mode");
    }
    if (stack.m() != sys.m) throw DimensionError("Brownian stack and system differ in m");
    if (stack.max_depth() < ctrl.max_level) {
        throw PreconditionError("Brownian stack depth below controller max_level");
    }
    if (stack.grid().origin != t0) throw PreconditionError("Brownian stack must start at t0");
    const std::int64_t chunks = chunk_count(t0, T, ctrl.base_step);
    if (chunks >= (std::int64_t{1} << (62 - stack.max_depth()))) {
        throw PreconditionError("too many base steps for the dyadic tick range");
    }
    const std::int64_t end_tick = chunks * stack.base_ticks();
    const double grow_margin = ctrl.safety * std::exp2(-(tab.sde_order() + 1.0));

    auto level_of_length = [&](std::int64_t len) {
        return stack.max_depth() - std::countr_zero(static_cast<std::uint64_t>(len));
    };

    const std::size_t n = sys.n;
    State y(y0.begin(), y0.end());
    State y_high(n), y_low(tab.embedded() ? n : 0);
    StepWorkspace ws;
    PathCounters counters;
    std::int64_t tick = 0;
    int level = fixed ? *ctrl.fixed_level : ctrl.min_level;
    int rejects_here = 0;

    while (tick < end_tick) {
        IncrementNode node = stack.next_node(rng, level);
        if (node.start != tick) throw BrownianError("Brownian stack out of step with the path");
        const double t = stack.grid().time(tick);
        const double dt = node.dt();
        const int node_level = level_of_length(node.length);
        const auto dW = node.dW_values();

        double err = 0.0;
        bool finite = true;
        try {
            rk_step(tab, sys, y, t, dt, dW, y_high,
                    fixed ? std::span<double>() : std::span<double>(y_low), ws);
        } catch (const EvaluationError&) {
            if (fixed) throw;
            finite = false;
        }
        counters.f_evals += tab.stages();
        if (finite) {
            finite = std::all_of(y_high.begin(), y_high.end(), [](double v) { return std::isfinite(v); });
            if (!finite && fixed) throw StepFailure("non-finite state", t, dt, INFINITY);
        }
        if (!fixed) err = finite ? error_norm(y_high, y_low, y, ctrl) : INFINITY;

        if (!fixed && !(err <= 1.0)) {
            ++counters.rejected;
            ++rejects_here;
            observer(StepReport{t + dt, y_high, err, false, dt, tick});
            if (rejects_here > ctrl.max_rejects) {
                throw StepFailure("too many rejected steps", t, dt, err);
            }
            if (node_level >= ctrl.max_level) {
                throw StepFailure(finite ? "step size underflow" : "non-finite state", t, dt, err);
            }
            stack.push(std::move(node));
            level = node_level + 1;
            continue;
        }

        y.swap(y_high);
        if (sys.projection) sys.projection(y);
        tick += node.length;
        ++counters.accepted;
        rejects_here = 0;
        observer(StepReport{stack.grid().time(tick), y, err, true, dt, tick});
        if (fixed) {
            level = *ctrl.fixed_level;
        } else {
            level = node_level;
            if (err < grow_margin && node_level > ctrl.min_level) level = node_level - 1;
        }
    }
    return counters;
}

/// Convenience overload recording every accepted state.
inline SolutionPath integrate_path(const SdeSystem& sys, const ButcherTableau& tab,
                                   const StepController& ctrl, BrownianStack& stack,
                                   RngStream& rng, std::span<const double> y0, double t0,
                                   double T) {
    SolutionPath path;
    path.t.push_back(t0);
    path.x.emplace_back(y0.begin(), y0.end());
    path.counters = integrate_path(sys, tab, ctrl, stack, rng, y0, t0, T,
                                   [&](const StepReport& r) {
                                       if (!r.accepted) return;
                                       path.t.push_back(r.t_new);
                                       path.x.emplace_back(r.y_new.begin(), r.y_new.end());
                                   });
    return path;
}

} // namespace sderk
