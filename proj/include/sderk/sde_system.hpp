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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sderk/error.hpp"

namespace sderk {

/// Real state vector X = (X^1, ..., X^n). Complex systems interleave (re, im).
using State = std::vector<double>;

/// drift(x, t, out): out[j] = a^j(x, t).
using DriftFn = std::function<void(std::span<const double>, double, std::span<double>)>;
/// diffusion(x, t, out): out[j*m + k] = b^j_k(x, t), row-major n x m.
using DiffusionFn = std::function<void(std::span<const double>, double, std::span<double>)>;
/// jacobian(x, t, out): out[(j*m + k)*n + i] = d b^j_k / d X^i, n x m x n.
using JacobianFn = std::function<void(std::span<const double>, double, std::span<double>)>;

/// How the drift/diffusion pair is to be read.
///
/// `ito`: the coefficients of dX = a dt + b dW; the effective increment
/// subtracts the Ito correction from a.
/// `derivative`: drift is already dX/dt and diffusion is dX/dW^k, so the
/// correction has been folded in by the author of the system.
enum class SdeForm { ito, derivative };

struct SdeSystem {
    std::size_t n = 0;
    std::size_t m = 0;
    DriftFn drift;
    DiffusionFn diffusion;
    JacobianFn diffusion_jacobian; // optional; finite differences otherwise
    SdeForm form = SdeForm::ito;
    std::string name;
    /// Optional in-place projection applied to accepted states (e.g. renormalization).
    std::function<void(std::span<double>)> projection;

    bool has_jacobian() const noexcept { return static_cast<bool>(diffusion_jacobian); }
};

/// Full-step increments (dt, dW^1..dW^m) fed to every stage of a step.
struct IncrementInput {
    double dt = 0.0;
    std::vector<double> dW;
};

namespace detail {

inline void check_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw EvaluationError(std::string(what) + ": non-finite entry at index "
                                  + std::to_string(i));
        }
    }
}

inline void check_state(const SdeSystem& sys, std::span<const double> x) {
    if (x.size() != sys.n) {
        throw DimensionError("state has " + std::to_string(x.size())
                             + " entries, system '" + sys.name + "' expects "
                             + std::to_string(sys.n));
    }
}

} // namespace detail

inline double default_fd_step(double xi) { return 1e-6 * std::max(1.0, std::abs(xi)); }

/// Central-difference jacobian of the diffusion, laid out as n x m x n.
///
/// A positive `h` is used as an absolute step for every component; `h <= 0`
/// selects the per-component default 1e-6 * max(1, |x_i|).
inline void finite_difference_jacobian(const SdeSystem& sys, std::span<const double> x, double t,
                                       double h, std::span<double> out) {
    const std::size_t n = sys.n, m = sys.m;
    detail::check_state(sys, x);
    if (out.size() != n * m * n) throw DimensionError("jacobian buffer must hold n*m*n entries");
    if (m == 0) return;

    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> bp(n * m), bm(n * m);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = h > 0.0 ? h : default_fd_step(x[i]);
        const double saved = xp[i];
        xp[i] = saved + step;
        sys.diffusion(xp, t, bp);
        xp[i] = saved - step;
        sys.diffusion(xp, t, bm);
        xp[i] = saved;
        for (std::size_t jk = 0; jk < n * m; ++jk) {
            if (!std::isfinite(bp[jk]) || !std::isfinite(bm[jk])) {
                throw EvaluationError("diffusion non-finite at displaced state (component "
                                      + std::to_string(i) + ")");
            }
            out[jk * n + i] = (bp[jk] - bm[jk]) / (2.0 * step);
        }
    }
}

inline std::vector<double> finite_difference_jacobian(const SdeSystem& sys,
                                                      std::span<const double> x, double t,
                                                      double h) {
    if (!(h > 0.0)) throw PreconditionError("finite-difference step must be positive");
    std::vector<double> out(sys.n * sys.m * sys.n);
    finite_difference_jacobian(sys, x, t, h, out);
    return out;
}

/// Scratch buffers reused across effective-increment evaluations.
struct IncrementWorkspace {
    std::vector<double> a, b, jac, corr;

    void resize(const SdeSystem& sys) {
        a.resize(sys.n);
        b.resize(sys.n * sys.m);
        if (sys.form == SdeForm::ito && sys.m > 0) {
            jac.resize(sys.n * sys.m * sys.n);
            corr.resize(sys.n);
        }
    }
};

namespace detail {

// c^j = 1/2 sum_k sum_i b^i_k db^j_k/dX^i, given b and the jacobian.
inline void ito_correction_from(std::size_t n, std::size_t m, std::span<const double> b,
                                std::span<const double> jac, std::span<double> out) {
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double* row = jac.data() + (j * m + k) * n;
            for (std::size_t i = 0; i < n; ++i) s += b[i * m + k] * row[i];
        }
        out[j] = 0.5 * s;
    }
}

inline void fill_jacobian(const SdeSystem& sys, std::span<const double> x, double t,
                          std::span<double> jac) {
    if (sys.has_jacobian()) {
        sys.diffusion_jacobian(x, t, jac);
    } else {
        finite_difference_jacobian(sys, x, t, 0.0, jac);
    }
    const std::size_t n = sys.n, m = sys.m;
    for (std::size_t idx = 0; idx < jac.size(); ++idx) {
        if (!std::isfinite(jac[idx])) {
            const std::size_t i = idx % n, k = (idx / n) % m, j = idx / (n * m);
            throw EvaluationError("non-finite diffusion jacobian entry (j=" + std::to_string(j)
                                  + ", k=" + std::to_string(k) + ", i=" + std::to_string(i) + ")");
        }
    }
}

} // namespace detail

/// Ito drift correction 1/2 sum_k sum_i b^i_k db^j_k/dX^i.
inline State ito_drift_correction(const SdeSystem& sys, std::span<const double> x, double t) {
    detail::check_state(sys, x);
    State out(sys.n, 0.0);
    if (sys.m == 0) return out;
    std::vector<double> b(sys.n * sys.m), jac(sys.n * sys.m * sys.n);
    sys.diffusion(x, t, b);
    detail::fill_jacobian(sys, x, t, jac);
    detail::ito_correction_from(sys.n, sys.m, b, jac, out);
    return out;
}

/// Effective increment f = (dX/dt) dt + sum_k (dX/dW^k) dW^k evaluated at (x, t).
///
/// Computed as drift_part + noise_part with the noise sum accumulated from
/// zero, so f(dt, dW) == f(dt, 0) + f(0, dW) bit for bit.
inline void effective_increment(const SdeSystem& sys, std::span<const double> x, double t,
                                double dt, std::span<const double> dW, std::span<double> out,
                                IncrementWorkspace& ws) {
    const std::size_t n = sys.n, m = sys.m;
    if (dW.size() != m) {
        throw DimensionError("increment has " + std::to_string(dW.size())
                             + " Wiener components, system expects " + std::to_string(m));
    }
    ws.resize(sys);
    sys.drift(x, t, ws.a);
    if (m > 0) sys.diffusion(x, t, ws.b);

    const bool correct = sys.form == SdeForm::ito && m > 0;
    if (correct) {
        detail::fill_jacobian(sys, x, t, ws.jac);
        detail::ito_correction_from(n, m, ws.b, ws.jac, ws.corr);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double rate = correct ? ws.a[j] - ws.corr[j] : ws.a[j];
        double noise = 0.0;
        for (std::size_t k = 0; k < m; ++k) noise += ws.b[j * m + k] * dW[k];
        out[j] = rate * dt + noise;
    }
    detail::check_finite(out, "effective increment");
}

inline State effective_increment(const SdeSystem& sys, std::span<const double> x, double t,
                                 const IncrementInput& inc) {
    detail::check_state(sys, x);
    State out(sys.n);
    IncrementWorkspace ws;
    effective_increment(sys, x, t, inc.dt, inc.dW, out, ws);
    return out;
}

} // namespace sderk
