// SPDX-License-Identifier: MIT
//
// Model specification for scalar mean-field SDEs with jumps in semi-linear form
//
//   dX = b(t, rho) X dt + (C_t X + sigma0(t, pi)) dW
//        + int (F_{t,z} X + lambda0(t, z, eta)) Ntilde(dz, dt),
//
// with rho = E X, pi = E psi(X), eta = E xi(X), a finite Levy measure
// mu(dz) = nu * density(z) dz, and the deterministic mean curve f(t) = E X_t
// solving f' = b(t, f) f.
#pragma once

#include "mfj/error.hpp"
#include "mfj/quadrature.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfj {

// ============================================================================
// Time grid
// ============================================================================

/// Uniform partition t_i = i * T / steps of [0, T].
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 1;

    [[nodiscard]] double dt() const noexcept { return horizon / static_cast<double>(steps); }
    [[nodiscard]] double time(std::size_t i) const noexcept {
        return i == steps ? horizon : static_cast<double>(i) * dt();
    }
    [[nodiscard]] std::size_t points() const noexcept { return steps + 1; }

    /// Grid with step dt; dt must divide the horizon.
    static TimeGrid with_step(double horizon, double dt) {
        if (!(dt > 0.0) || !(horizon > 0.0)) throw ModelError("time step and horizon must be positive");
        const double ratio = horizon / dt;
        const double n = std::round(ratio);
        if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
            throw ModelError("time step does not divide the horizon");
        }
        return TimeGrid{horizon, static_cast<std::size_t>(n)};
    }
};

// ============================================================================
// Mark law
// ============================================================================

/// Density of the jump marks. Uniform on [lo, hi]; lo == hi is a point mass.
struct MarkLaw {
    double lo = -0.5;
    double hi = 0.5;

    static MarkLaw uniform(double lo, double hi) { return MarkLaw{lo, hi}; }
    static MarkLaw point(double z) { return MarkLaw{z, z}; }

    [[nodiscard]] bool is_point() const noexcept { return lo == hi; }
    [[nodiscard]] bool contains(double z) const noexcept { return z >= lo && z <= hi; }
    [[nodiscard]] double sample(double u01) const noexcept { return lo + (hi - lo) * u01; }

    /// Quadrature nodes with probability weights (summing to one).
    [[nodiscard]] std::vector<double> nodes() const {
        if (is_point()) return {lo};
        const auto& gl = gauss_legendre16();
        std::vector<double> z(gl.nodes.size());
        const double mid = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = mid + half * gl.nodes[i];
        return z;
    }
    [[nodiscard]] std::vector<double> weights() const {
        if (is_point()) return {1.0};
        const auto& gl = gauss_legendre16();
        std::vector<double> w(gl.weights.begin(), gl.weights.end());
        for (double& x : w) x *= 0.5;
        return w;
    }

    /// E f(Z).
    template <class F>
    [[nodiscard]] double expect(F&& f) const {
        if (is_point()) return f(lo);
        return gauss_legendre16().integrate(f, lo, hi) / (hi - lo);
    }
};

// ============================================================================
// ModelSpec
// ============================================================================

struct ModelSpec {
    std::function<double(double t, double rho)> drift_b;
    std::function<double(double t, double rho)> drift_b_drho;
    std::function<double(double t)> diffusion_C;
    std::function<double(double t, double pi)> sigma0;
    std::function<double(double t, double pi)> sigma0_dpi;
    std::function<double(double t, double z)> jump_F;
    std::function<double(double t, double z, double eta)> lambda0;
    std::function<double(double t, double z, double eta)> lambda0_deta;

    // Mean-field couplings pi = E psi(X), eta = E xi(X). Identity by default.
    std::function<double(double)> psi = [](double x) { return x; };
    std::function<double(double)> psi_prime = [](double) { return 1.0; };
    std::function<double(double)> xi = [](double x) { return x; };
    std::function<double(double)> xi_prime = [](double) { return 1.0; };

    double nu = 0.0;
    MarkLaw marks{};
    double x0 = 1.0;
    double horizon = 1.0;

    /// Total Levy mass over [0, T].
    [[nodiscard]] double q_total() const noexcept { return nu * horizon; }

    void validate() const {
        if (!drift_b || !drift_b_drho || !diffusion_C || !sigma0 || !sigma0_dpi || !jump_F ||
            !lambda0 || !lambda0_deta || !psi || !psi_prime || !xi || !xi_prime) {
            throw ModelError("model coefficient evaluator missing");
        }
        if (!(nu >= 0.0) || !std::isfinite(nu)) throw ModelError("jump intensity must be non-negative");
        if (x0 == 0.0 || !std::isfinite(x0)) throw ModelError("initial state must be finite and nonzero");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ModelError("horizon must be positive");
        if (!(marks.hi >= marks.lo)) throw ModelError("mark law support is empty");
    }
};

/// The affine coefficient family used by the built-in examples and the CLI:
///   b(t,rho)        = b_const + b_linear*rho + b_ratio*(rho+1)/rho
///   C_t             = diffusion_C
///   sigma0(t,pi)    = sigma0_const + sigma0_pi*pi
///   F_{t,z}         = jump_F + jump_F_z*z
///   lambda0(t,z,eta)= lambda0_const + lambda0_eta*eta
struct AffineModel {
    double b_const = 0.0;
    double b_linear = 0.0;
    double b_ratio = 0.0;
    double diffusion_C = 0.0;
    double sigma0_const = 0.0;
    double sigma0_pi = 0.0;
    double jump_F = 0.0;
    double jump_F_z = 0.0;
    double lambda0_const = 0.0;
    double lambda0_eta = 0.0;
    double nu = 0.0;
    double mark_lo = -0.5;
    double mark_hi = 0.5;
    double x0 = 1.0;
    double horizon = 1.0;

    [[nodiscard]] ModelSpec to_spec() const {
        ModelSpec s;
        const AffineModel p = *this;
        s.drift_b = [p](double, double rho) {
            double v = p.b_const + p.b_linear * rho;
            if (p.b_ratio != 0.0) v += p.b_ratio * (rho + 1.0) / rho;
            return v;
        };
        s.drift_b_drho = [p](double, double rho) {
            double v = p.b_linear;
            if (p.b_ratio != 0.0) v -= p.b_ratio / (rho * rho);
            return v;
        };
        s.diffusion_C = [p](double) { return p.diffusion_C; };
        s.sigma0 = [p](double, double pi) { return p.sigma0_const + p.sigma0_pi * pi; };
        s.sigma0_dpi = [p](double, double) { return p.sigma0_pi; };
        s.jump_F = [p](double, double z) { return p.jump_F + p.jump_F_z * z; };
        s.lambda0 = [p](double, double, double eta) { return p.lambda0_const + p.lambda0_eta * eta; };
        s.lambda0_deta = [p](double, double, double) { return p.lambda0_eta; };
        s.nu = nu;
        s.marks = MarkLaw::uniform(mark_lo, mark_hi);
        s.x0 = x0;
        s.horizon = horizon;
        s.validate();
        return s;
    }
};

// ============================================================================
// Mean function
// ============================================================================

/// f(t_i) = E X_{t_i} on the grid, with the cumulative drift integral
/// int_0^{t_i} b(s, f(s)) ds and the initial-value sensitivity df/dx0.
struct MeanFunction {
    TimeGrid grid;
    std::vector<double> values;
    std::vector<double> integral_b;
    std::vector<double> dfdx0;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

namespace detail {

struct MeanState {
    double f;
    double g;
    double I;
};

inline MeanState mean_rhs(const ModelSpec& spec, double t, const MeanState& s) {
    const double b = spec.drift_b(t, s.f);
    const double db = spec.drift_b_drho(t, s.f);
    return {b * s.f, (db * s.f + b) * s.g, b};
}

}  // namespace detail

inline constexpr double kMeanOverflowGuard = 1e12;

/// Solves f' = b(t, f) f, f(0) = x0 with classical RK4 on the grid, together
/// with the sensitivity g = df/dx0 (g' = (db/drho f + b) g, g(0) = 1) and the
/// drift integral, which RK4 integrates with Simpson weights.
inline MeanFunction solve_mean_ode(const ModelSpec& spec, const TimeGrid& grid) {
    if (spec.x0 == 0.0) throw ModelError("initial state must be nonzero");
    MeanFunction mf;
    mf.grid = grid;
    const std::size_t n = grid.points();
    mf.values.resize(n);
    mf.integral_b.resize(n);
    mf.dfdx0.resize(n);

    detail::MeanState s{spec.x0, 1.0, 0.0};
    mf.values[0] = s.f;
    mf.dfdx0[0] = s.g;
    mf.integral_b[0] = 0.0;
    const double h = grid.dt();
    const auto axpy = [](const detail::MeanState& a, double c, const detail::MeanState& d) {
        return detail::MeanState{a.f + c * d.f, a.g + c * d.g, a.I + c * d.I};
    };
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double t = grid.time(i);
        const auto k1 = detail::mean_rhs(spec, t, s);
        const auto k2 = detail::mean_rhs(spec, t + 0.5 * h, axpy(s, 0.5 * h, k1));
        const auto k3 = detail::mean_rhs(spec, t + 0.5 * h, axpy(s, 0.5 * h, k2));
        const auto k4 = detail::mean_rhs(spec, t + h, axpy(s, h, k3));
        const double prev = s.f;
        s.f += h / 6.0 * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f);
        s.g += h / 6.0 * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g);
        s.I += h / 6.0 * (k1.I + 2.0 * k2.I + 2.0 * k3.I + k4.I);
        if (!std::isfinite(s.f) || std::abs(s.f) > kMeanOverflowGuard) {
            throw ModelError("mean function unbounded on [0,T]");
        }
        if (s.f == 0.0 || (s.f > 0.0) != (prev > 0.0)) throw ModelError("mean function hits zero");
        mf.values[i + 1] = s.f;
        mf.dfdx0[i + 1] = s.g;
        mf.integral_b[i + 1] = s.I;
    }
    return mf;
}

/// X_t = exp(int_0^t b(s, f(s)) ds) * S_t.
[[nodiscard]] inline double transform_S_to_X(double s_value, std::size_t t_index, const MeanFunction& mf) {
    return std::exp(mf.integral_b.at(t_index)) * s_value;
}

/// Inverse of transform_S_to_X.
[[nodiscard]] inline double transform_X_to_S(double x_value, std::size_t t_index, const MeanFunction& mf) {
    return x_value / std::exp(mf.integral_b.at(t_index));
}

// ============================================================================
// Built-in experiment models
// ============================================================================

enum class Builtin { example1, example2 };

[[nodiscard]] inline std::string_view to_string(Builtin b) {
    return b == Builtin::example1 ? "example1" : "example2";
}

/// Coefficients of the two reference experiments.
///   example1: b = a (rho+1)/rho, C = 1, F = 1, a = 1
///   example2: b = a rho,         C = 1, F = 1, a = -1
/// Both use nu = 0.1, marks uniform on [-1/2, 1/2], x0 = 1, T = 1.
[[nodiscard]] inline AffineModel builtin_params(Builtin which) {
    AffineModel p;
    if (which == Builtin::example1) {
        p.b_ratio = 1.0;
    } else {
        p.b_linear = -1.0;
    }
    p.diffusion_C = 1.0;
    p.jump_F = 1.0;
    p.nu = 0.1;
    p.mark_lo = -0.5;
    p.mark_hi = 0.5;
    p.x0 = 1.0;
    p.horizon = 1.0;
    return p;
}

struct BuiltinModel {
    ModelSpec spec;
    /// Closed-form mean curve t -> f(t), where one is known to be valid.
    std::optional<std::function<double(double)>> closed_form_mean;
};

[[nodiscard]] inline BuiltinModel builtin_example(Builtin which) {
    BuiltinModel m{builtin_params(which).to_spec(), std::nullopt};
    if (which == Builtin::example2) {
        const double x = m.spec.x0;
        m.closed_form_mean = [x](double t) { return x / (x * t + 1.0); };
    }
    // example1 is solved numerically only; see README for the discrepancy
    // between its printed closed form and the stated drift.
    return m;
}

}  // namespace mfj
