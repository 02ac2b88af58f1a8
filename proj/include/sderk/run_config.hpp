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

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sderk/csv.hpp"
#include "sderk/error.hpp"

namespace sderk {

/// Effective parameters of an example run. Every field is echoed into output headers.
struct RunConfig {
    int n_levels = 11;
    double T = 3.0;
    int chunks = 64;
    double rtol = 1e-8;
    double atol = 1e-10;
    int min_level = 3; // largest step is T / chunks / 2^min_level
    std::uint64_t trajectories = 5000;
    std::uint64_t master_seed = 1;
    std::string tableau; // file path, "rk4", or empty for the default 9(8) file
    bool renormalize = false;

    void validate() const {
        if (n_levels < 2) throw PreconditionError("n_levels must be at least 2");
        if (!(T > 0.0)) throw PreconditionError("T must be positive");
        if (chunks < 1) throw PreconditionError("chunks must be positive");
        if (!(rtol >= 0.0) || !(atol >= 0.0) || !(rtol + atol > 0.0)) {
            throw PreconditionError("tolerances must be non-negative with rtol + atol > 0");
        }
        if (min_level < 0 || min_level > 40) throw PreconditionError("min_level must be in [0, 40]");
        if (trajectories < 1) throw PreconditionError("trajectories must be positive");
    }

    double base_step() const { return T / chunks; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v, std::size_t line) {
    T out{};
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ParseError(line, "invalid value '" + std::string(v) + "' for " + std::string(key));
    }
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view v, std::size_t line) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ParseError(line, "invalid boolean '" + std::string(v) + "' for " + std::string(key));
}

} // namespace detail

/// Applies one key=value setting; `line` is used in error messages.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value,
                          std::size_t line = 0) {
    using detail::parse_number;
    if (key == "n_levels") cfg.n_levels = parse_number<int>(key, value, line);
    else if (key == "T") cfg.T = parse_number<double>(key, value, line);
    else if (key == "chunks") cfg.chunks = parse_number<int>(key, value, line);
    else if (key == "rtol") cfg.rtol = parse_number<double>(key, value, line);
    else if (key == "atol") cfg.atol = parse_number<double>(key, value, line);
    else if (key == "min_level") cfg.min_level = parse_number<int>(key, value, line);
    else if (key == "trajectories") cfg.trajectories = parse_number<std::uint64_t>(key, value, line);
    else if (key == "master_seed") cfg.master_seed = parse_number<std::uint64_t>(key, value, line);
    else if (key == "tableau") cfg.tableau = std::string(value);
    else if (key == "renormalize") cfg.renormalize = detail::parse_bool(key, value, line);
    else throw ParseError(line, "unknown key '" + std::string(key) + "'");
}

/// Parses key=value lines on top of `base`. '#' starts a comment.
inline RunConfig parse_run_config(std::string_view text, RunConfig base = {}) {
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(lineno, "expected key=value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ParseError(lineno, "expected key=value");
        apply_setting(base, key, value, lineno);
    }
    return base;
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
    std::ifstream f(path);
    if (!f) throw std::ios_base::failure("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str(), std::move(base));
}

/// key=value pairs of every field, in declaration order.
inline std::vector<std::pair<std::string, std::string>> describe(const RunConfig& cfg) {
    return {
        {"n_levels", std::to_string(cfg.n_levels)},
        {"T", format_double(cfg.T)},
        {"chunks", std::to_string(cfg.chunks)},
        {"rtol", format_double(cfg.rtol)},
        {"atol", format_double(cfg.atol)},
        {"min_level", std::to_string(cfg.min_level)},
        {"trajectories", std::to_string(cfg.trajectories)},
        {"master_seed", std::to_string(cfg.master_seed)},
        {"tableau", cfg.tableau},
        {"renormalize", cfg.renormalize ? "true" : "false"},
    };
}

} // namespace sderk
