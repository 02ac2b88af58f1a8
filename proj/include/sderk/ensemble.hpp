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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sderk/brownian.hpp"
#include "sderk/error.hpp"
#include "sderk/parallel.hpp"
#include "sderk/rng.hpp"
#include "sderk/sde_system.hpp"
#include "sderk/stepper.hpp"
#include "sderk/tableau.hpp"

namespace sderk {

struct Observable {
    std::string name;
    std::function<double(std::span<const double>)> eval;
};

struct EnsembleOptions {
    std::uint64_t master_seed = 0;
    std::size_t trajectories = 1;
    std::size_t first_index = 0; // trajectory i uses RngStream(master_seed, first_index + i)
    unsigned workers = 1;
};

struct ObservableStats {
    std::string name;
    std::vector<double> mean;
    std::optional<std::vector<double>> standard_error; // absent for a single trajectory
};

struct EnsembleResult {
    std::vector<double> grid;
    std::vector<ObservableStats> observables;
    std::size_t trajectories = 0;
    std::uint64_t master_seed = 0;
    std::size_t first_index = 0;
    PathCounters totals;
};

/// Monte Carlo average of observables over independent trajectories.
///
/// Grid times must be multiples of ctrl.base_step after t0. Observables are
/// read from the accepted state at each grid time; means and standard errors
/// are summed in trajectory order, so the result does not depend on
/// options.workers.
inline EnsembleResult run_ensemble(const SdeSystem& sys, const ButcherTableau& tab,
                                   const StepController& ctrl,
                                   const std::vector<Observable>& observables,
                                   const std::vector<double>& grid, std::span<const double> x0,
                                   double t0, const EnsembleOptions& opt) {
    if (opt.trajectories < 1) throw PreconditionError("ensemble needs at least one trajectory");
    if (grid.empty()) throw PreconditionError("output grid is empty");
    if (observables.empty()) throw PreconditionError("no observables requested");
    ctrl.validate();
    detail::check_state(sys, x0);

    // Chunk index of each grid point.
    std::vector<std::int64_t> chunk(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        chunk[g] = grid[g] == t0 ? 0 : chunk_count(t0, grid[g], ctrl.base_step);
        if (g > 0 && chunk[g] <= chunk[g - 1]) {
            throw PreconditionError("output grid must be strictly increasing");
        }
    }
    const double T = grid.back();
    const std::size_t G = grid.size(), O = observables.size(), N = opt.trajectories;
    std::vector<double> values(N * G * O);
    std::vector<PathCounters> counters(N);

    auto body = [&](std::size_t i) {
        double* row = values.data() + i * G * O;
        std::size_t g = 0;
        auto record = [&](std::span<const double> y) {
            for (std::size_t o = 0; o < O; ++o) {
                const double v = observables[o].eval(y);
                if (!std::isfinite(v)) {
                    throw EvaluationError("observable '" + observables[o].name + "' is not finite");
                }
                row[g * O + o] = v;
            }
            ++g;
        };
        if (chunk[0] == 0) record(x0);
        if (chunk.back() == 0) return;
        RngStream rng(opt.master_seed, opt.first_index + i);
        BrownianStack stack(t0, ctrl.base_step, sys.m, std::max(ctrl.max_level, 0));
        const std::int64_t base = stack.base_ticks();
        counters[i] = integrate_path(sys, tab, ctrl, stack, rng, x0, t0, T,
                                     [&](const StepReport& r) {
                                         if (!r.accepted || r.tick % base != 0) return;
                                         if (g < G && r.tick / base == chunk[g]) record(r.y_new);
                                     });
        if (g != G) throw Error("trajectory missed an output grid point");
    };
    try {
        parallel_for(N, opt.workers, body);
    } catch (const TrajectoryError& e) {
        throw TrajectoryError(opt.first_index + e.index(), e.cause());
    }

    EnsembleResult res;
    res.grid = grid;
    res.trajectories = N;
    res.master_seed = opt.master_seed;
    res.first_index = opt.first_index;
    for (const auto& c : counters) {
        res.totals.accepted += c.accepted;
        res.totals.rejected += c.rejected;
        res.totals.f_evals += c.f_evals;
    }
    for (std::size_t o = 0; o < O; ++o) {
        ObservableStats st{observables[o].name, std::vector<double>(G, 0.0), std::nullopt};
        if (N > 1) st.standard_error.emplace(G, 0.0);
        for (std::size_t g = 0; g < G; ++g) {
            double sum = 0.0;
            for (std::size_t i = 0; i < N; ++i) sum += values[(i * G + g) * O + o];
            const double mean = sum / static_cast<double>(N);
            st.mean[g] = mean;
            if (N > 1) {
                double ss = 0.0;
                for (std::size_t i = 0; i < N; ++i) {
                    const double d = values[(i * G + g) * O + o] - mean;
                    ss += d * d;
                }
                const double var = ss / static_cast<double>(N - 1);
                (*st.standard_error)[g] = std::sqrt(var / static_cast<double>(N));
            }
        }
        res.observables.push_back(std::move(st));
    }
    return res;
}

/// SE_N / SE_4N per grid point for one observable; about 2 when statistics are sound.
///
/// Points where both errors vanish report 1.
inline std::vector<double> standard_error_scaling_check(const EnsembleResult& small,
                                                        const EnsembleResult& large,
                                                        std::size_t observable = 0) {
    if (small.master_seed == large.master_seed) {
        const std::size_t a0 = small.first_index, a1 = a0 + small.trajectories;
        const std::size_t b0 = large.first_index, b1 = b0 + large.trajectories;
        if (a0 < b1 && b0 < a1) {
            throw PreconditionError("ensembles share trajectory seeds; use disjoint seed ranges");
        }
    }
    if (small.grid != large.grid) throw PreconditionError("ensembles use different grids");
    if (observable >= small.observables.size() || observable >= large.observables.size()) {
        throw PreconditionError("observable index out of range");
    }
    const auto& se_s = small.observables[observable].standard_error;
    const auto& se_l = large.observables[observable].standard_error;
    if (!se_s || !se_l) throw PreconditionError("standard errors need at least two trajectories");
    std::vector<double> ratio(small.grid.size());
    for (std::size_t g = 0; g < ratio.size(); ++g) {
        const double a = (*se_s)[g], b = (*se_l)[g];
        ratio[g] = (a == 0.0 && b == 0.0) ? 1.0 : a / b;
    }
    return ratio;
}

} // namespace sderk
