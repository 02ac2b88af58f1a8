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

// Command-line front end: example ensembles, strong-order measurement, tableau checks.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "sderk/sderk.hpp"

#ifndef SDERK_DATA_DIR
#define SDERK_DATA_DIR "data"
#endif

namespace {

enum Exit : int { ok = 0, check_failed = 1, config_error = 2, io_error = 3, numerical_abort = 4 };

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trajectories;
    std::optional<double> rtol, atol, horizon;
    std::optional<int> chunks, min_level;
    std::optional<std::string> tableau;
    std::string out;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

sderk::RunConfig effective_config(const Overrides& o, sderk::RunConfig base) {
    sderk::RunConfig cfg = o.config.empty() ? base : sderk::load_run_config(o.config, base);
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.trajectories) cfg.trajectories = *o.trajectories;
    if (o.rtol) cfg.rtol = *o.rtol;
    if (o.atol) cfg.atol = *o.atol;
    if (o.horizon) cfg.T = *o.horizon;
    if (o.chunks) cfg.chunks = *o.chunks;
    if (o.min_level) cfg.min_level = *o.min_level;
    if (o.tableau) cfg.tableau = *o.tableau;
    cfg.validate();
    return cfg;
}

std::string default_tableau_path() { return std::string(SDERK_DATA_DIR) + "/tableaus/verner98.tab"; }

sderk::ButcherTableau resolve_tableau(std::string& choice) {
    if (choice.empty()) choice = default_tableau_path();
    if (choice == "rk4") return sderk::builtin_rk4();
    return sderk::load_tableau_file(choice);
}

void emit(const Overrides& o, const std::string& text) {
    if (o.out.empty() || o.out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot write output file '" + o.out + "'");
    f << text;
    f.close();
    if (!f) throw std::ios_base::failure("failed writing output file '" + o.out + "'");
}

int cmd_example(const std::string& name, const Overrides& o) {
    const auto kind = sderk::parse_example_kind(name);
    sderk::RunConfig cfg = effective_config(o, {});
    const auto tab = resolve_tableau(cfg.tableau);
    if (!tab.embedded()) {
        throw sderk::PreconditionError("example runs need a tableau with embedded weights");
    }
    const auto curve = sderk::run_example(kind, cfg, tab, o.workers);
    std::ostringstream os;
    sderk::write_example_csv(os, kind, cfg, tab, curve);
    emit(o, os.str());
    return ok;
}

struct ConvergeArgs {
    std::string problem = "gbm";
    double mu = 0.06;
    double sigma = 0.5;
    double x0 = 1.0;
    int coarse_exp = 4;
    int fine_exp = 9;
    double min_error = 10.0 * std::numeric_limits<double>::epsilon();
    double max_error = std::numeric_limits<double>::infinity();
};

int cmd_converge(const ConvergeArgs& a, const Overrides& o) {
    if (a.problem != "gbm") throw sderk::PreconditionError("unknown problem '" + a.problem + "'");
    if (a.coarse_exp > a.fine_exp) throw sderk::PreconditionError("--h-coarse must not exceed --h-fine");
    sderk::RunConfig base;
    base.T = 1.0;
    base.trajectories = 2000;
    base.tableau = "rk4";
    sderk::RunConfig cfg = effective_config(o, base);
    const auto tab = resolve_tableau(cfg.tableau);

    std::vector<double> hs;
    for (int e = a.coarse_exp; e <= a.fine_exp; ++e) hs.push_back(std::ldexp(1.0, -e));
    sderk::StrongErrorOptions opt;
    opt.paths = cfg.trajectories;
    opt.seed = cfg.master_seed;
    opt.T = cfg.T;
    opt.x0 = {a.x0};
    opt.workers = o.workers;
    opt.min_error = a.min_error;
    opt.max_error = a.max_error;
    const auto rep = sderk::strong_error(sderk::gbm_system(a.mu, a.sigma), tab, hs, opt);

    using sderk::format_double;
    std::ostringstream os;
    os << "# sderk " << sderk::version_string << '\n'
       << "# problem=" << a.problem << '\n'
       << "# mu=" << format_double(a.mu) << '\n'
       << "# sigma=" << format_double(a.sigma) << '\n'
       << "# x0=" << format_double(a.x0) << '\n'
       << "# T=" << format_double(cfg.T) << '\n'
       << "# tableau=" << cfg.tableau << '\n'
       << "# tableau_name=" << tab.name << '\n'
       << "# paths=" << cfg.trajectories << '\n'
       << "# master_seed=" << cfg.master_seed << '\n'
       << "# h_exponents=" << a.coarse_exp << ".." << a.fine_exp << '\n'
       << "# error_window=" << format_double(a.min_error) << ',' << format_double(a.max_error)
       << '\n';
    sderk::write_order_csv(os, rep);
    emit(o, os.str());
    std::cerr << sderk::summary_line(rep) << '\n';
    return rep.fit ? ok : numerical_abort;
}

int cmd_validate(const std::string& path) {
    sderk::ButcherTableau tab;
    try {
        tab = path == "rk4" ? sderk::builtin_rk4() : sderk::load_tableau_file(path);
    } catch (const sderk::ValidationError& e) {
        std::cout << "FAIL " << e.what() << '\n';
        return check_failed;
    }
    std::cout << "tableau " << tab.name << ": " << tab.stages() << " stages, order " << tab.order;
    if (tab.embedded()) std::cout << " (embedded " << tab.embedded_order << ")";
    std::cout << '\n';

    bool pass = true;
    auto report = [&](const std::string& what, double residual) {
        const bool good = residual <= sderk::tableau_tolerance;
        pass = pass && good;
        std::cout << (good ? "ok   " : "FAIL ") << what << " residual=" << sderk::format_double(residual)
                  << '\n';
    };
    double row = 0.0;
    for (std::size_t i = 0; i < tab.stages(); ++i) {
        double s = 0.0;
        for (double v : tab.a[i]) s += v;
        row = std::max(row, std::abs(s - tab.c[i]));
    }
    report("row sums c_i = sum_j a_ij (max)", row);
    for (const auto& q : sderk::validate_quadrature(tab, tab.order)) {
        report("quadrature b, order " + std::to_string(q.order), q.residual);
        if (q.residual_hat && q.order <= tab.embedded_order) {
            report("quadrature bhat, order " + std::to_string(q.order), *q.residual_hat);
        }
    }
    std::cout << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? ok : check_failed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive Runge-Kutta integrators for Ito SDEs"};
    app.set_version_flag("--version", std::string(sderk::version_string));
    app.require_subcommand(1);

    Overrides o;
    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "key=value configuration file");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--trajectories", o.trajectories, "number of trajectories or paths");
        sub->add_option("--rtol", o.rtol, "relative tolerance");
        sub->add_option("--atol", o.atol, "absolute tolerance");
        sub->add_option("--horizon", o.horizon, "final time T");
        sub->add_option("--chunks", o.chunks, "number of base steps in [0, T]");
        sub->add_option("--tableau", o.tableau, "tableau file, or 'rk4'");
        sub->add_option("--out", o.out, "output CSV path (default stdout)");
        sub->add_option("--workers", o.workers, "worker threads; does not change results")
            ->check(CLI::PositiveNumber);
    };

    std::string example_name;
    auto* example = app.add_subcommand("example", "stochastic ensemble vs master equation");
    example->add_option("name", example_name, "absorber or cascade")->required();
    example->add_option("--min-level", o.min_level, "largest step is (T / chunks) / 2^k");
    add_common(example);

    ConvergeArgs conv;
    auto* converge = app.add_subcommand("converge", "empirical strong convergence order");
    converge->add_option("problem", conv.problem, "analytic problem (gbm)");
    converge->add_option("--mu", conv.mu, "drift rate");
    converge->add_option("--sigma", conv.sigma, "volatility");
    converge->add_option("--x0", conv.x0, "initial value");
    converge->add_option("--h-coarse", conv.coarse_exp, "largest step 2^-k");
    converge->add_option("--h-fine", conv.fine_exp, "smallest step 2^-k");
    converge->add_option("--min-error", conv.min_error, "lower bound of the fitted error window");
    converge->add_option("--max-error", conv.max_error, "upper bound of the fitted error window");
    add_common(converge);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check tableau consistency and quadrature");
    validate->add_option("tableau", validate_path, "tableau file, or 'rk4'")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (*example) return cmd_example(example_name, o);
        if (*converge) return cmd_converge(conv, o);
        if (*validate) return cmd_validate(validate_path);
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io_error;
    } catch (const sderk::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const sderk::ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const sderk::PreconditionError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const sderk::Error& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return numerical_abort;
    } catch (const std::exception& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return numerical_abort;
    }
    return ok;
}
