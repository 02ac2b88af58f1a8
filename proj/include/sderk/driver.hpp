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
#include <ostream>
#include <string>
#include <vector>

#include "sderk/csv.hpp"
#include "sderk/ensemble.hpp"
#include "sderk/error.hpp"
#include "sderk/quantum.hpp"
#include "sderk/run_config.hpp"
#include "sderk/stepper.hpp"
#include "sderk/tableau.hpp"
#include "sderk/version.hpp"

namespace sderk {

enum class ExampleKind { absorber, cascade };

inline ExampleKind parse_example_kind(const std::string& name) {
    if (name == "absorber") return ExampleKind::absorber;
    if (name == "cascade") return ExampleKind::cascade;
    throw PreconditionError("unknown example '" + name + "' (expected absorber or cascade)");
}

inline const char* to_string(ExampleKind k) {
    return k == ExampleKind::absorber ? "absorber" : "cascade";
}

/// Mean occupation from trajectories next to the master-equation value.
struct ExampleCurve {
    std::vector<double> t;
    std::vector<double> n_mc;
    std::vector<double> n_se;
    std::vector<double> n_oracle;
    PathCounters totals;
};

inline constexpr double oracle_rtol = 1e-12;
inline constexpr double oracle_atol = 1e-14;

/// Output grid t_g = g T / chunks, g = 0..chunks.
inline std::vector<double> chunk_grid(const RunConfig& cfg) {
    std::vector<double> grid(static_cast<std::size_t>(cfg.chunks) + 1);
    for (std::size_t g = 0; g < grid.size(); ++g) grid[g] = static_cast<double>(g) * cfg.base_step();
    return grid;
}

/// Master-equation occupation on the chunk grid, starting from the vacuum.
inline std::vector<double> oracle_occupation(ExampleKind kind, const RunConfig& cfg,
                                             const ButcherTableau& tab) {
    const quantum::OscillatorBasis basis(cfg.n_levels);
    StepController ctrl;
    ctrl.rtol = oracle_rtol;
    ctrl.atol = oracle_atol;
    ctrl.base_step = cfg.base_step();
    auto rhs = [&](const quantum::DensityMatrix& rho) {
        return kind == ExampleKind::absorber ? quantum::master_rhs_absorber(basis, rho)
                                             : quantum::master_rhs_cascade(basis, rho);
    };
    const auto rhos =
        quantum::integrate_master(rhs, quantum::fock_density(basis, 0), chunk_grid(cfg), tab, ctrl);
    std::vector<double> n(rhos.size());
    for (std::size_t g = 0; g < rhos.size(); ++g) n[g] = quantum::occupation_number(rhos[g]);
    return n;
}

/// Runs the stochastic ensemble and its master-equation oracle from the vacuum.
inline ExampleCurve run_example(ExampleKind kind, const RunConfig& cfg, const ButcherTableau& tab,
                                unsigned workers = 1) {
    cfg.validate();
    const SdeSystem sys = kind == ExampleKind::absorber
                              ? quantum::absorber_system(cfg.n_levels, cfg.renormalize)
                              : quantum::cascade_system(cfg.n_levels, cfg.renormalize);
    StepController ctrl;
    ctrl.rtol = cfg.rtol;
    ctrl.atol = cfg.atol;
    ctrl.base_step = cfg.base_step();
    ctrl.min_level = cfg.min_level;

    const auto grid = chunk_grid(cfg);
    const quantum::OscillatorBasis basis(cfg.n_levels);
    const State x0 = quantum::fock_state(basis, 0);
    const std::vector<Observable> obs{
        {"occupation", [](std::span<const double> x) { return quantum::occupation_number(x); }}};
    EnsembleOptions opt;
    opt.master_seed = cfg.master_seed;
    opt.trajectories = cfg.trajectories;
    opt.workers = workers;
    const auto ens = run_ensemble(sys, tab, ctrl, obs, grid, x0, 0.0, opt);

    ExampleCurve c;
    c.t = grid;
    c.n_mc = ens.observables[0].mean;
    c.n_se = ens.observables[0].standard_error.value_or(std::vector<double>(grid.size(), 0.0));
    c.n_oracle = oracle_occupation(kind, cfg, tab);
    c.totals = ens.totals;
    return c;
}

/// CSV with `#` provenance headers and columns t,n_mc,n_se,n_oracle.
inline void write_example_csv(std::ostream& os, ExampleKind kind, const RunConfig& cfg,
                              const ButcherTableau& tab, const ExampleCurve& c) {
    os << "# sderk " << version_string << '\n';
    os << "# example=" << to_string(kind) << '\n';
    for (const auto& [k, v] : describe(cfg)) os << "# " << k << '=' << v << '\n';
    os << "# tableau_name=" << tab.name << '\n';
    os << "# oracle_rtol=" << format_double(oracle_rtol) << '\n';
    os << "# oracle_atol=" << format_double(oracle_atol) << '\n';
    os << "# initial_state=fock0\n";
    os << "t,n_mc,n_se,n_oracle\n";
    for (std::size_t g = 0; g < c.t.size(); ++g) {
        os << format_double(c.t[g]) << ',' << format_double(c.n_mc[g]) << ','
           << format_double(c.n_se[g]) << ',' << format_double(c.n_oracle[g]) << '\n';
    }
}

} // namespace sderk
