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
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sderk/brownian.hpp"
#include "sderk/error.hpp"
#include "sderk/sde_system.hpp"
#include "sderk/stepper.hpp"
#include "sderk/tableau.hpp"

// Stochastic wave equations on a truncated harmonic-oscillator basis and the
// Lindblad master equations their ensemble averages obey.
//
// Wavefunctions are stored as 2*n_levels reals, (Re psi_0, Im psi_0, Re psi_1, ...).

namespace sderk::quantum {

using cplx = std::complex<double>;
using DensityMatrix = Eigen::MatrixXcd;

/// Fock states |0>, ..., |n_levels - 1> with the truncated ladder operators.
class OscillatorBasis {
public:
    explicit OscillatorBasis(int n_levels) : levels_(n_levels) {
        if (n_levels < 2) throw PreconditionError("oscillator basis needs at least 2 levels");
        sqrt_n_.resize(static_cast<std::size_t>(n_levels));
        for (int n = 0; n < n_levels; ++n) sqrt_n_[static_cast<std::size_t>(n)] = std::sqrt(double(n));
    }

    int levels() const noexcept { return levels_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(levels_); }
    std::size_t real_dimension() const noexcept { return 2 * size(); }

    /// a with a[n-1][n] = sqrt(n).
    Eigen::MatrixXcd lowering() const {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(levels_, levels_);
        for (int n = 1; n < levels_; ++n) a(n - 1, n) = sqrt_n_[static_cast<std::size_t>(n)];
        return a;
    }

    /// a^dagger a = diag(0, 1, ..., n_levels - 1).
    Eigen::MatrixXcd number() const {
        Eigen::MatrixXcd num = Eigen::MatrixXcd::Zero(levels_, levels_);
        for (int n = 0; n < levels_; ++n) num(n, n) = double(n);
        return num;
    }

    // Vector actions of the ladder operators; `out` must not alias `in`.
    void lower(const cplx* in, cplx* out) const noexcept {
        const std::size_t d = size();
        for (std::size_t n = 0; n + 1 < d; ++n) out[n] = sqrt_n_[n + 1] * in[n + 1];
        out[d - 1] = 0.0;
    }
    void raise(const cplx* in, cplx* out) const noexcept {
        const std::size_t d = size();
        out[0] = 0.0;
        for (std::size_t n = 1; n < d; ++n) out[n] = sqrt_n_[n] * in[n - 1];
    }
    void count(const cplx* in, cplx* out) const noexcept {
        for (std::size_t n = 0; n < size(); ++n) out[n] = double(n) * in[n];
    }

private:
    int levels_;
    std::vector<double> sqrt_n_;
};

/// <u|v> = sum conj(u_n) v_n.
inline cplx inner(const cplx* u, const cplx* v, std::size_t d) noexcept {
    cplx acc = 0.0;
    for (std::size_t n = 0; n < d; ++n) acc += std::conj(u[n]) * v[n];
    return acc;
}

inline const cplx* as_complex(std::span<const double> x) {
    return reinterpret_cast<const cplx*>(x.data());
}
inline cplx* as_complex(std::span<double> x) { return reinterpret_cast<cplx*>(x.data()); }

/// Embeds amplitudes <n|psi> as interleaved reals.
inline State embed(std::span<const cplx> psi) {
    State x(2 * psi.size());
    for (std::size_t n = 0; n < psi.size(); ++n) {
        x[2 * n] = psi[n].real();
        x[2 * n + 1] = psi[n].imag();
    }
    return x;
}

/// Fock state |k> as a real state vector.
inline State fock_state(const OscillatorBasis& basis, int k) {
    if (k < 0 || k >= basis.levels()) throw PreconditionError("Fock index outside the basis");
    State x(basis.real_dimension(), 0.0);
    x[2 * static_cast<std::size_t>(k)] = 1.0;
    return x;
}

/// <psi|psi>.
inline double norm_squared(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

/// Mean occupation <psi|a^dagger a|psi>.
inline double occupation_number(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t n = 0; 2 * n + 1 < x.size(); ++n) {
        s += double(n) * (x[2 * n] * x[2 * n] + x[2 * n + 1] * x[2 * n + 1]);
    }
    return s;
}

/// Tr{a^dagger a rho}.
inline double occupation_number(const DensityMatrix& rho) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < rho.rows(); ++n) s += double(n) * rho(n, n).real();
    return s;
}

namespace detail {

struct Scratch {
    std::vector<cplx> u, v, w, p, q;
    void resize(std::size_t d) {
        for (auto* b : {&u, &v, &w, &p, &q}) b->resize(d);
    }
};

inline Scratch& scratch(std::size_t d) {
    thread_local Scratch s;
    s.resize(d);
    return s;
}

// D_delta of gamma (L psi - <L> psi) along delta, for each real coordinate
// direction, written into jac[(j*m + k)*N + i] for Wiener index k.
template <class ApplyL>
void noise_jacobian(std::size_t d, std::size_t m, std::size_t k, double gamma, const cplx* psi,
                    ApplyL&& apply_l, std::span<double> jac) {
    const std::size_t N = 2 * d;
    std::vector<cplx> lpsi(d), delta(d, 0.0), ldelta(d);
    apply_l(psi, lpsi.data());
    const cplx mean_l = inner(psi, lpsi.data(), d);
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t comp = i / 2;
        const cplx unit = (i % 2 == 0) ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
        delta[comp] = unit;
        apply_l(delta.data(), ldelta.data());
        const cplx shift = std::conj(unit) * lpsi[comp] + inner(psi, ldelta.data(), d);
        for (std::size_t n = 0; n < d; ++n) {
            const cplx dv = gamma * (ldelta[n] - mean_l * delta[n] - shift * psi[n]);
            jac[((2 * n) * m + k) * N + i] = dv.real();
            jac[((2 * n + 1) * m + k) * N + i] = dv.imag();
        }
        delta[comp] = 0.0;
    }
}

inline void normalize(std::span<double> x) {
    const double nrm = std::sqrt(norm_squared(x));
    if (nrm > 0.0) {
        for (double& v : x) v /= nrm;
    }
}

} // namespace detail

/// Nonlinear absorber, registered in derivative form:
///   dpsi/dW = sqrt2 (a^2 - <a^2>) psi
///   dpsi/dt = .1(a^+ - a)psi + (<a^4> - <a^2>^2)psi - (a^2 - <a^2>)^2 psi
///             + (<a^+2 a^2> - |<a^2>|^2)psi + (2<a^+2> a^2 - a^+2 a^2 - |<a^2>|^2)psi
inline SdeSystem absorber_system(int n_levels = 11, bool renormalize = false) {
    OscillatorBasis basis(n_levels);
    const std::size_t d = basis.size();
    SdeSystem sys;
    sys.n = 2 * d;
    sys.m = 1;
    sys.form = SdeForm::derivative;
    sys.name = "absorber";
    sys.drift = [basis, d](std::span<const double> x, double, std::span<double> out) {
        auto& s = detail::scratch(d);
        const cplx* psi = as_complex(x);
        cplx* f = as_complex(out);
        basis.lower(psi, s.p.data());
        basis.lower(s.p.data(), s.u.data()); // u = a^2 psi
        basis.lower(s.u.data(), s.p.data());
        basis.lower(s.p.data(), s.v.data()); // v = a^4 psi
        basis.raise(s.u.data(), s.p.data());
        basis.raise(s.p.data(), s.w.data()); // w = a^+2 a^2 psi
        basis.raise(psi, s.p.data());
        basis.lower(psi, s.q.data()); // p = a^+ psi, q = a psi
        const cplx m2 = inner(psi, s.u.data(), d);
        const cplx m4 = inner(psi, s.v.data(), d);
        const double m22 = inner(s.u.data(), s.u.data(), d).real();
        const double abs2 = std::norm(m2);
        const cplx scalar = (m4 - m2 * m2) + (m22 - abs2) - abs2;
        for (std::size_t n = 0; n < d; ++n) {
            // (a^2 - <a^2>)^2 psi = a^4 psi - 2<a^2> a^2 psi + <a^2>^2 psi
            const cplx sq = s.v[n] - 2.0 * m2 * s.u[n] + m2 * m2 * psi[n];
            f[n] = 0.1 * (s.p[n] - s.q[n]) + scalar * psi[n] - sq + 2.0 * std::conj(m2) * s.u[n]
                   - s.w[n];
        }
    };
    sys.diffusion = [basis, d](std::span<const double> x, double, std::span<double> out) {
        auto& s = detail::scratch(d);
        const cplx* psi = as_complex(x);
        cplx* g = as_complex(out);
        basis.lower(psi, s.p.data());
        basis.lower(s.p.data(), s.u.data());
        const cplx m2 = inner(psi, s.u.data(), d);
        for (std::size_t n = 0; n < d; ++n) g[n] = std::numbers::sqrt2 * (s.u[n] - m2 * psi[n]);
    };
    if (renormalize) sys.projection = detail::normalize;
    return sys;
}

/// Absorber in Ito form, dpsi = A dt + B dW, with the analytic diffusion jacobian.
///   A = .1(a^+ - a)psi + (2<a^+2> a^2 - a^+2 a^2 - |<a^2>|^2)psi
///   B = sqrt2 (a^2 - <a^2>) psi
inline SdeSystem absorber_ito_system(int n_levels = 11) {
    OscillatorBasis basis(n_levels);
    const std::size_t d = basis.size();
    SdeSystem sys = absorber_system(n_levels);
    sys.form = SdeForm::ito;
    sys.name = "absorber-ito";
    sys.drift = [basis, d](std::span<const double> x, double, std::span<double> out) {
        auto& s = detail::scratch(d);
        const cplx* psi = as_complex(x);
        cplx* f = as_complex(out);
        basis.lower(psi, s.p.data());
        basis.lower(s.p.data(), s.u.data());
        basis.raise(s.u.data(), s.p.data());
        basis.raise(s.p.data(), s.w.data());
        basis.raise(psi, s.p.data());
        basis.lower(psi, s.q.data());
        const cplx m2 = inner(psi, s.u.data(), d);
        for (std::size_t n = 0; n < d; ++n) {
            f[n] = 0.1 * (s.p[n] - s.q[n]) + 2.0 * std::conj(m2) * s.u[n] - s.w[n]
                   - std::norm(m2) * psi[n];
        }
    };
    sys.diffusion_jacobian = [basis, d](std::span<const double> x, double, std::span<double> out) {
        auto a2 = [&basis, d](const cplx* in, cplx* o) {
            std::vector<cplx> tmp(d);
            basis.lower(in, tmp.data());
            basis.lower(tmp.data(), o);
        };
        detail::noise_jacobian(d, 1, 0, std::numbers::sqrt2, as_complex(x), a2, out);
    };
    return sys;
}

/// Quantum cascade with absorption and stimulated emission, derivative form, m = 2:
///   dpsi/dW1 = sqrt2 (N - <N>) psi,   dpsi/dW2 = .1 sqrt2 (a - <a>) psi
/// and dpsi/dt the Ito drift minus the correction for both noise channels.
inline SdeSystem cascade_system(int n_levels = 11, bool renormalize = false) {
    OscillatorBasis basis(n_levels);
    const std::size_t d = basis.size();
    SdeSystem sys;
    sys.n = 2 * d;
    sys.m = 2;
    sys.form = SdeForm::derivative;
    sys.name = "cascade";
    sys.drift = [basis, d](std::span<const double> x, double, std::span<double> out) {
        auto& s = detail::scratch(d);
        const cplx* psi = as_complex(x);
        cplx* f = as_complex(out);
        basis.lower(psi, s.q.data());        // q = a psi
        basis.lower(s.q.data(), s.u.data()); // u = a^2 psi
        basis.raise(psi, s.p.data());        // p = a^+ psi
        basis.count(psi, s.v.data());        // v = N psi
        basis.count(s.v.data(), s.w.data()); // w = N^2 psi
        const double mn = inner(psi, s.v.data(), d).real();
        const double mn2 = inner(psi, s.w.data(), d).real();
        const cplx ma = inner(psi, s.q.data(), d);
        const cplx ma2 = inner(psi, s.u.data(), d);
        const double abs_a = std::norm(ma);
        const cplx i01(0.0, 0.1);
        const cplx scalar = -mn * mn + 0.01 * (-abs_a) + 2.0 * (mn2 - mn * mn)
                            + 0.01 * (mn - abs_a) + 0.01 * (ma2 - ma * ma);
        for (std::size_t n = 0; n < d; ++n) {
            const cplx dn = s.w[n] - 2.0 * mn * s.v[n] + mn * mn * psi[n]; // (N - <N>)^2 psi
            const cplx da = s.u[n] - 2.0 * ma * s.q[n] + ma * ma * psi[n]; // (a - <a>)^2 psi
            f[n] = -i01 * (s.p[n] + s.q[n]) + 2.0 * mn * s.v[n] - s.w[n]
                   + 0.01 * (2.0 * std::conj(ma) * s.q[n] - s.v[n]) + scalar * psi[n] - dn
                   - 0.01 * da;
        }
    };
    sys.diffusion = [basis, d](std::span<const double> x, double, std::span<double> out) {
        auto& s = detail::scratch(d);
        const cplx* psi = as_complex(x);
        basis.count(psi, s.v.data());
        basis.lower(psi, s.q.data());
        const double mn = inner(psi, s.v.data(), d).real();
        const cplx ma = inner(psi, s.q.data(), d);
        const double c2 = 0.1 * std::numbers::sqrt2;
        for (std::size_t n = 0; n < d; ++n) {
            const cplx g1 = std::numbers::sqrt2 * (s.v[n] - mn * psi[n]);
            const cplx g2 = c2 * (s.q[n] - ma * psi[n]);
            out[(2 * n) * 2 + 0] = g1.real();
            out[(2 * n) * 2 + 1] = g2.real();
            out[(2 * n + 1) * 2 + 0] = g1.imag();
            out[(2 * n + 1) * 2 + 1] = g2.imag();
        }
    };
    if (renormalize) sys.projection = detail::normalize;
    return sys;
}

/// Cascade in Ito form with the analytic diffusion jacobian.
///   A = -.1i(a^+ + a)psi + (2<N> N - N^2 - <N>^2)psi + .01(2<a^+> a - N - |<a>|^2)psi
inline SdeSystem cascade_ito_system(int n_levels = 11) {
    OscillatorBasis basis(n_levels);
    const std::size_t d = basis.size();
    SdeSystem sys = cascade_system(n_levels);
    sys.form = SdeForm::ito;
    sys.name = "cascade-ito";
    sys.drift = [basis, d](std::span<const double> x, double, std::span<double> out) {
        auto& s = detail::scratch(d);
        const cplx* psi = as_complex(x);
        cplx* f = as_complex(out);
        basis.lower(psi, s.q.data());
        basis.raise(psi, s.p.data());
        basis.count(psi, s.v.data());
        basis.count(s.v.data(), s.w.data());
        const double mn = inner(psi, s.v.data(), d).real();
        const cplx ma = inner(psi, s.q.data(), d);
        const cplx i01(0.0, 0.1);
        for (std::size_t n = 0; n < d; ++n) {
            f[n] = -i01 * (s.p[n] + s.q[n]) + 2.0 * mn * s.v[n] - s.w[n] - mn * mn * psi[n]
                   + 0.01 * (2.0 * std::conj(ma) * s.q[n] - s.v[n] - std::norm(ma) * psi[n]);
        }
    };
    sys.diffusion_jacobian = [basis, d](std::span<const double> x, double, std::span<double> out) {
        const cplx* psi = as_complex(x);
        detail::noise_jacobian(d, 2, 0, std::numbers::sqrt2, psi,
                               [&basis](const cplx* in, cplx* o) { basis.count(in, o); }, out);
        detail::noise_jacobian(d, 2, 1, 0.1 * std::numbers::sqrt2, psi,
                               [&basis](const cplx* in, cplx* o) { basis.lower(in, o); }, out);
    };
    return sys;
}

/// d rho/dt = .1[a^+ - a, rho] + 2 a^2 rho a^+2 - a^+2 a^2 rho - rho a^+2 a^2.
inline DensityMatrix master_rhs_absorber(const OscillatorBasis& basis, const DensityMatrix& rho) {
    const Eigen::MatrixXcd a = basis.lowering();
    const Eigen::MatrixXcd ad = a.adjoint();
    const Eigen::MatrixXcd a2 = a * a;
    const Eigen::MatrixXcd ad2 = ad * ad;
    const Eigen::MatrixXcd h = ad - a;
    const Eigen::MatrixXcd loss = ad2 * a2;
    return 0.1 * (h * rho - rho * h) + 2.0 * a2 * rho * ad2 - loss * rho - rho * loss;
}

/// d rho/dt = -.1i[a^+ + a, rho] + 2 N rho N - N^2 rho - rho N^2
///            + .02 a rho a^+ - .01 N rho - .01 rho N.
inline DensityMatrix master_rhs_cascade(const OscillatorBasis& basis, const DensityMatrix& rho) {
    const Eigen::MatrixXcd a = basis.lowering();
    const Eigen::MatrixXcd ad = a.adjoint();
    const Eigen::MatrixXcd num = basis.number();
    const Eigen::MatrixXcd num2 = num * num;
    const Eigen::MatrixXcd x = ad + a;
    const cplx i01(0.0, 0.1);
    return -i01 * (x * rho - rho * x) + 2.0 * num * rho * num - num2 * rho - rho * num2
           + 0.02 * a * rho * ad - 0.01 * num * rho - 0.01 * rho * num;
}

/// Raised when the master-equation trace leaves 1 by more than the allowed drift.
class TraceDriftError : public Error {
public:
    using Error::Error;
};

inline constexpr double max_trace_drift = 1e-8;

/// Integrates d rho/dt = rhs(rho) deterministically through the same stepper
/// (m = 0) and returns rho at each grid time, symmetrized at every grid point.
///
/// Grid times must be multiples of ctrl.base_step; grid[0] is the start time.
template <class Rhs>
std::vector<DensityMatrix> integrate_master(Rhs&& rhs, const DensityMatrix& rho0,
                                            const std::vector<double>& grid,
                                            const ButcherTableau& tab,
                                            const StepController& ctrl) {
    if (rho0.rows() != rho0.cols()) throw DimensionError("density matrix must be square");
    if (grid.empty()) throw PreconditionError("empty grid");
    const Eigen::Index d = rho0.rows();
    const std::size_t nn = static_cast<std::size_t>(d * d);

    SdeSystem sys;
    sys.n = 2 * nn;
    sys.m = 0;
    sys.form = SdeForm::derivative;
    sys.name = "master-equation";
    sys.drift = [&rhs, d](std::span<const double> x, double, std::span<double> out) {
        Eigen::Map<const Eigen::MatrixXcd> rho(reinterpret_cast<const cplx*>(x.data()), d, d);
        Eigen::Map<Eigen::MatrixXcd> drho(reinterpret_cast<cplx*>(out.data()), d, d);
        drho = rhs(DensityMatrix(rho));
    };
    sys.diffusion = [](std::span<const double>, double, std::span<double>) {};

    auto check_trace = [&](const DensityMatrix& rho, double t) {
        const double drift = std::abs(rho.trace() - cplx(1.0, 0.0));
        if (!(drift <= max_trace_drift)) {
            throw TraceDriftError("master-equation trace drifted by " + std::to_string(drift)
                                  + " at t=" + std::to_string(t));
        }
    };

    std::vector<DensityMatrix> out;
    out.reserve(grid.size());
    DensityMatrix rho = 0.5 * (rho0 + rho0.adjoint());
    check_trace(rho, grid[0]);
    out.push_back(rho);
    State x(2 * nn);
    RngStream unused(0, 0);
    for (std::size_t g = 1; g < grid.size(); ++g) {
        std::copy_n(reinterpret_cast<const double*>(rho.data()), 2 * nn, x.begin());
        BrownianStack stack(grid[g - 1], ctrl.base_step, 0, ctrl.max_level);
        State last = x;
        integrate_path(sys, tab, ctrl, stack, unused, x, grid[g - 1], grid[g],
                       [&](const StepReport& r) {
                           if (r.accepted) std::copy(r.y_new.begin(), r.y_new.end(), last.begin());
                       });
        Eigen::Map<const Eigen::MatrixXcd> next(reinterpret_cast<const cplx*>(last.data()), d, d);
        rho = 0.5 * (next + next.adjoint());
        check_trace(rho, grid[g]);
        out.push_back(rho);
    }
    return out;
}

/// |k><k| in the given basis.
inline DensityMatrix fock_density(const OscillatorBasis& basis, int k) {
    DensityMatrix rho = DensityMatrix::Zero(basis.levels(), basis.levels());
    rho(k, k) = 1.0;
    return rho;
}

} // namespace sderk::quantum
