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
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sderk/error.hpp"

namespace sderk {

/// Explicit Runge-Kutta tableau, optionally with embedded lower-order weights.
struct ButcherTableau {
    std::string name;
    int order = 0;          // classical ODE order of `b`
    int embedded_order = 0; // order of `b_hat`, 0 when absent
    std::vector<double> c;
    std::vector<std::vector<double>> a; // a[i] holds the i entries left of the diagonal
    std::vector<double> b;
    std::optional<std::vector<double>> b_hat;

    std::size_t stages() const noexcept { return c.size(); }
    bool embedded() const noexcept { return b_hat.has_value(); }
    /// Order of the lifted scheme on SDEs: half the ODE order.
    double sde_order() const noexcept { return 0.5 * order; }
};

inline constexpr double tableau_tolerance = 1e-12;

/// Throws ValidationError when the structural invariants fail.
inline void validate_tableau(const ButcherTableau& tab) {
    const std::size_t s = tab.stages();
    if (s == 0) throw ValidationError("non-empty stage count", 0.0);
    if (tab.a.size() != s || tab.b.size() != s || (tab.b_hat && tab.b_hat->size() != s)) {
        throw ValidationError("coefficient array sizes match stage count", 0.0);
    }
    for (std::size_t i = 0; i < s; ++i) {
        if (tab.a[i].size() != i) throw ValidationError("strictly lower-triangular A", 0.0);
        double row = 0.0;
        for (double v : tab.a[i]) row += v;
        const double res = std::abs(row - tab.c[i]);
        if (!(res <= tableau_tolerance)) {
            throw ValidationError("row-sum condition c_" + std::to_string(i + 1) + " = sum_j a_"
                                      + std::to_string(i + 1) + "j",
                                  res);
        }
    }
    auto weight_sum = [](const std::vector<double>& w) {
        double acc = 0.0;
        for (double v : w) acc += v;
        return std::abs(acc - 1.0);
    };
    if (const double r = weight_sum(tab.b); !(r <= tableau_tolerance)) {
        throw ValidationError("weight sum sum_i b_i = 1", r);
    }
    if (tab.b_hat) {
        if (const double r = weight_sum(*tab.b_hat); !(r <= tableau_tolerance)) {
            throw ValidationError("embedded weight sum sum_i bhat_i = 1", r);
        }
    }
}

/// Classical four-stage fourth-order Runge-Kutta (no embedded weights).
inline ButcherTableau builtin_rk4() {
    ButcherTableau t;
    t.name = "rk4";
    t.order = 4;
    t.c = {0.0, 0.5, 0.5, 1.0};
    t.a = {{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}};
    t.b = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    return t;
}

struct QuadratureResidual {
    int order;
    double residual;                    // |sum_i b_i c_i^(q-1) - 1/q|
    std::optional<double> residual_hat; // same for b_hat when present
};

/// Quadrature-condition residuals for q = 1..max_order.
inline std::vector<QuadratureResidual> validate_quadrature(const ButcherTableau& tab,
                                                           int max_order) {
    if (max_order < 1) throw PreconditionError("max_order must be at least 1");
    auto residual = [&](const std::vector<double>& w, int q) {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * std::pow(tab.c[i], q - 1);
        return std::abs(acc - 1.0 / q);
    };
    std::vector<QuadratureResidual> out;
    for (int q = 1; q <= max_order; ++q) {
        QuadratureResidual r{q, residual(tab.b, q), std::nullopt};
        if (tab.b_hat) r.residual_hat = residual(*tab.b_hat, q);
        out.push_back(r);
    }
    return out;
}

namespace detail {

inline std::string format_coefficient(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 24);
    return std::string(buf, res.ptr);
}

inline double parse_coefficient(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok.front() == '+') ++first;
    auto res = std::from_chars(first, tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw ParseError(line, "malformed decimal '" + std::string(tok) + "'");
    }
    return v;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

} // namespace detail

/// Writes the line-oriented tableau format read by load_tableau.
inline std::string serialize_tableau(const ButcherTableau& tab) {
    std::ostringstream os;
    auto row = [&](const char* key, const std::vector<double>& v) {
        os << key;
        for (double x : v) os << ' ' << detail::format_coefficient(x);
        os << '\n';
    };
    os << "name " << tab.name << '\n';
    os << "order " << tab.order << ' ' << (tab.b_hat ? tab.embedded_order : 0) << '\n';
    os << "stages " << tab.stages() << '\n';
    row("c", tab.c);
    for (std::size_t i = 0; i < tab.stages(); ++i) {
        os << "a " << i + 1;
        for (double x : tab.a[i]) os << ' ' << detail::format_coefficient(x);
        os << '\n';
    }
    row("b", tab.b);
    if (tab.b_hat) row("bhat", *tab.b_hat);
    return os.str();
}

/// Parses a tableau file and checks its invariants.
///
/// Blank lines and lines starting with '#' are ignored; reported line numbers
/// refer to the original text.
inline ButcherTableau load_tableau(std::string_view text) {
    ButcherTableau tab;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    enum class Expect { name, order, stages, c, a, b, bhat, done } expect = Expect::name;
    std::size_t s = 0, next_row = 1;

    auto read_values = [&](const std::vector<std::string>& toks, std::size_t count,
                           std::size_t first) {
        if (toks.size() - first != count) {
            throw ParseError(lineno, "expected " + std::to_string(count) + " values after '"
                                         + toks[0] + "', found "
                                         + std::to_string(toks.size() - first));
        }
        std::vector<double> v;
        v.reserve(count);
        for (std::size_t i = first; i < toks.size(); ++i) {
            v.push_back(detail::parse_coefficient(toks[i], lineno));
        }
        return v;
    };
    auto parse_int = [&](const std::string& tok) {
        int v = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            throw ParseError(lineno, "malformed integer '" + tok + "'");
        }
        return v;
    };

    while (std::getline(in, raw)) {
        ++lineno;
        const auto toks = detail::split_ws(raw);
        if (toks.empty() || toks[0][0] == '#') continue;
        const std::string& key = toks[0];
        switch (expect) {
        case Expect::name:
            if (key != "name" || toks.size() < 2) throw ParseError(lineno, "expected 'name <label>'");
            tab.name = toks[1];
            for (std::size_t i = 2; i < toks.size(); ++i) tab.name += " " + toks[i];
            expect = Expect::order;
            break;
        case Expect::order:
            if (key != "order" || toks.size() != 3) {
                throw ParseError(lineno, "expected 'order <q> <q_embedded|0>'");
            }
            tab.order = parse_int(toks[1]);
            tab.embedded_order = parse_int(toks[2]);
            if (tab.order < 1 || tab.embedded_order < 0) throw ParseError(lineno, "invalid order");
            expect = Expect::stages;
            break;
        case Expect::stages: {
            if (key != "stages" || toks.size() != 2) throw ParseError(lineno, "expected 'stages <s>'");
            const int si = parse_int(toks[1]);
            if (si < 1) throw ParseError(lineno, "stage count must be positive");
            s = static_cast<std::size_t>(si);
            expect = Expect::c;
            break;
        }
        case Expect::c:
            if (key != "c") throw ParseError(lineno, "expected 'c' line");
            tab.c = read_values(toks, s, 1);
            expect = Expect::a;
            break;
        case Expect::a: {
            if (key != "a" || toks.size() < 2) {
                throw ParseError(lineno, "expected 'a " + std::to_string(next_row) + "' line");
            }
            if (parse_int(toks[1]) != static_cast<int>(next_row)) {
                throw ParseError(lineno, "expected row " + std::to_string(next_row) + " of A");
            }
            tab.a.push_back(read_values(toks, next_row - 1, 2));
            if (++next_row > s) expect = Expect::b;
            break;
        }
        case Expect::b:
            if (key != "b") throw ParseError(lineno, "expected 'b' line");
            tab.b = read_values(toks, s, 1);
            expect = Expect::bhat;
            break;
        case Expect::bhat:
            if (key != "bhat") throw ParseError(lineno, "unexpected '" + key + "' after weights");
            tab.b_hat = read_values(toks, s, 1);
            expect = Expect::done;
            break;
        case Expect::done:
            throw ParseError(lineno, "trailing content '" + key + "'");
        }
    }
    if (expect != Expect::bhat && expect != Expect::done) {
        throw ParseError(lineno + 1, "unexpected end of tableau");
    }
    if (tab.b_hat && tab.embedded_order == 0) {
        throw ParseError(lineno, "embedded weights present but embedded order is 0");
    }
    if (!tab.b_hat && tab.embedded_order != 0) {
        throw ParseError(lineno + 1, "embedded order declared but 'bhat' line missing");
    }
    validate_tableau(tab);
    return tab;
}

/// Reads and parses a tableau file; I/O failures raise std::ios_base::failure.
inline ButcherTableau load_tableau_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::ios_base::failure("cannot open tableau file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return load_tableau(ss.str());
}

} // namespace sderk
