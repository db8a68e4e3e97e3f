// SPDX-License-Identifier: MIT
//
// Euler simulation of the state X, the first-variation process Y, the
// auxiliary process u and the flow dX/dx = Y u, all driven by one Noise so
// every quantity of a path shares its random numbers.
#pragma once

#include "mfj/error.hpp"
#include "mfj/model.hpp"
#include "mfj/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace mfj {

struct SimOptions {
    /// Subtract dt * int lambda mu(dz) each step. Off reproduces the raw
    /// (uncompensated) jump sum of the textbook scheme.
    bool compensated = true;
};

inline constexpr double kSingularVariation = 1e-14;

/// Deterministic per-step inputs of the scheme, computed once per (model, grid).
/// Index k runs over steps; node tables are laid out as k * n_nodes + n.
struct StepCoefficients {
    std::vector<double> mark_nodes;
    std::vector<double> mark_weights;

    std::vector<double> A;          // b(t_k, f_k)
    std::vector<double> alpha_coef; // d_rho b(t_k, f_k) * df/dx0; alpha = alpha_coef * X
    std::vector<double> B;          // C_{t_k}
    std::vector<double> sigma0;     // sigma0(t_k, pi_k)
    std::vector<double> beta;       // d_pi sigma0 * d pi / dx
    std::vector<double> mean_F;     // E_z F
    std::vector<double> mean_L0;    // E_z lambda0
    std::vector<double> mean_gamma_over; // E_z gamma / (1 + F)
    std::vector<double> mean_F_gamma_over; // E_z F gamma / (1 + F)

    std::vector<double> pi;   // per grid point, size steps + 1
    std::vector<double> eta;  // per grid point
    std::vector<double> deta; // d eta / dx per grid point

    std::vector<double> F_nodes;
    std::vector<double> L0_nodes;
    std::vector<unsigned char> mark_independent;

    [[nodiscard]] std::size_t n_nodes() const noexcept { return mark_nodes.size(); }
};

/// Everything a path needs besides its noise: model, grid, mean curve and the
/// precomputed coefficient table. Immutable and shareable across threads.
class PathContext {
public:
    PathContext(ModelSpec spec, const TimeGrid& grid, SimOptions options = {})
        : PathContext(spec, solve_mean_ode(spec, grid), options) {}

    PathContext(ModelSpec spec, MeanFunction mean, SimOptions options = {})
        : spec_(std::move(spec)), mean_(std::move(mean)), options_(options) {
        spec_.validate();
        build_coefficients();
    }

    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const TimeGrid& grid() const noexcept { return mean_.grid; }
    [[nodiscard]] const MeanFunction& mean() const noexcept { return mean_; }
    [[nodiscard]] const SimOptions& options() const noexcept { return options_; }
    [[nodiscard]] const StepCoefficients& coefficients() const noexcept { return coef_; }

    /// lambda(t_k, x, z, eta_k) = F_{t_k,z} x + lambda0(t_k, z, eta_k).
    [[nodiscard]] double jump_coefficient(std::size_t k, double x, double z) const {
        const double t = grid().time(k);
        return spec_.jump_F(t, z) * x + spec_.lambda0(t, z, coef_.eta[k]);
    }

    /// Same as jump_coefficient at quadrature node n of step k.
    [[nodiscard]] double jump_coefficient_node(std::size_t k, std::size_t n, double x) const noexcept {
        const std::size_t i = k * coef_.n_nodes() + n;
        return coef_.F_nodes[i] * x + coef_.L0_nodes[i];
    }

    [[nodiscard]] Noise sample(const RngConfig& rng) const { return sample_noise(spec_, grid(), rng); }

private:
    void build_coefficients() {
        const TimeGrid& g = grid();
        const std::size_t n = g.steps;
        if (mean_.values.size() != g.points()) throw ModelError("mean function does not match the grid");
        coef_.mark_nodes = spec_.marks.nodes();
        coef_.mark_weights = spec_.marks.weights();
        const std::size_t nn = coef_.n_nodes();

        coef_.pi.resize(n + 1);
        coef_.eta.resize(n + 1);
        coef_.deta.resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            const double f = mean_.values[k];
            coef_.pi[k] = spec_.psi(f);
            coef_.eta[k] = spec_.xi(f);
            coef_.deta[k] = spec_.xi_prime(f) * mean_.dfdx0[k];
        }
        for (auto* v : {&coef_.A, &coef_.alpha_coef, &coef_.B, &coef_.sigma0, &coef_.beta, &coef_.mean_F,
                        &coef_.mean_L0, &coef_.mean_gamma_over, &coef_.mean_F_gamma_over}) {
            v->resize(n);
        }
        coef_.F_nodes.resize(n * nn);
        coef_.L0_nodes.resize(n * nn);
        coef_.mark_independent.resize(n);

        for (std::size_t k = 0; k < n; ++k) {
            const double t = g.time(k);
            const double f = mean_.values[k];
            const double dfdx = mean_.dfdx0[k];
            coef_.A[k] = spec_.drift_b(t, f);
            coef_.alpha_coef[k] = spec_.drift_b_drho(t, f) * dfdx;
            coef_.B[k] = spec_.diffusion_C(t);
            coef_.sigma0[k] = spec_.sigma0(t, coef_.pi[k]);
            coef_.beta[k] = spec_.sigma0_dpi(t, coef_.pi[k]) * spec_.psi_prime(f) * dfdx;
            double eF = 0.0, eL = 0.0, eG = 0.0, eFG = 0.0;
            bool same = true;
            for (std::size_t i = 0; i < nn; ++i) {
                const double z = coef_.mark_nodes[i];
                const double w = coef_.mark_weights[i];
                const double F = spec_.jump_F(t, z);
                const double L0 = spec_.lambda0(t, z, coef_.eta[k]);
                const double gamma = spec_.lambda0_deta(t, z, coef_.eta[k]) * coef_.deta[k];
                coef_.F_nodes[k * nn + i] = F;
                coef_.L0_nodes[k * nn + i] = L0;
                if (i > 0 && (F != coef_.F_nodes[k * nn] || L0 != coef_.L0_nodes[k * nn])) same = false;
                eF += w * F;
                eL += w * L0;
                eG += w * gamma / (1.0 + F);
                eFG += w * F * gamma / (1.0 + F);
            }
            coef_.mean_F[k] = eF;
            coef_.mean_L0[k] = eL;
            coef_.mean_gamma_over[k] = eG;
            coef_.mean_F_gamma_over[k] = eFG;
            coef_.mark_independent[k] = same ? 1 : 0;
        }
    }

    ModelSpec spec_;
    MeanFunction mean_;
    SimOptions options_;
    StepCoefficients coef_;
};

// ============================================================================
// PathBundle
// ============================================================================

struct PathBundle {
    Noise noise;
    std::vector<double> X;
    std::vector<double> Y;
    std::vector<double> u;
    std::vector<double> flow;
    double run_max = 0.0;
    double run_min = 0.0;
    std::size_t argmax_index = 0;
    std::size_t argmin_index = 0;

    [[nodiscard]] std::size_t last() const noexcept { return X.size() - 1; }
};

struct Extrema {
    double max = 0.0;
    std::size_t argmax = 0;
    double min = 0.0;
    std::size_t argmin = 0;
};

/// Discrete running extrema; ties go to the first index attaining them.
inline Extrema path_extrema(std::span<const double> X) {
    Extrema e{X[0], 0, X[0], 0};
    for (std::size_t i = 1; i < X.size(); ++i) {
        if (X[i] > e.max) {
            e.max = X[i];
            e.argmax = i;
        }
        if (X[i] < e.min) {
            e.min = X[i];
            e.argmin = i;
        }
    }
    return e;
}

inline void path_extrema(PathBundle& b) {
    const Extrema e = path_extrema(b.X);
    b.run_max = e.max;
    b.argmax_index = e.argmax;
    b.run_min = e.min;
    b.argmin_index = e.argmin;
}

namespace detail {

inline void check_noise(const PathContext& ctx, const Noise& noise) {
    if (noise.steps() != ctx.grid().steps) throw ModelError("noise does not match the grid");
    for (std::size_t j = 1; j < noise.jumps.size(); ++j) {
        if (noise.jumps[j].step < noise.jumps[j - 1].step) throw ModelError("jump events not sorted");
    }
    if (!noise.jumps.empty() && noise.jumps.back().step >= noise.steps()) {
        throw ModelError("jump event outside the grid");
    }
}

}  // namespace detail

/// X_{k+1} = X_k + b_k X_k dt + (C_k X_k + sigma0_k) dW_k
///           + sum_j (F X_k + lambda0) - dt nu E_z(F X_k + lambda0).
inline void euler_path(const PathContext& ctx, const Noise& noise, PathBundle& out) {
    detail::check_noise(ctx, noise);
    const auto& c = ctx.coefficients();
    const auto& spec = ctx.spec();
    const std::size_t n = ctx.grid().steps;
    const double dt = ctx.grid().dt();
    const double comp = ctx.options().compensated ? spec.nu * dt : 0.0;

    out.noise = noise;
    out.X.resize(n + 1);
    out.X[0] = spec.x0;
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = out.X[k];
        double jumps = 0.0;
        for (; j < noise.jumps.size() && noise.jumps[j].step == k; ++j) {
            jumps += ctx.jump_coefficient(k, x, noise.jumps[j].mark);
        }
        const double next = x + c.A[k] * x * dt + (c.B[k] * x + c.sigma0[k]) * noise.dW[k] + jumps -
                            comp * (c.mean_F[k] * x + c.mean_L0[k]);
        if (!std::isfinite(next)) throw SimulationError("path diverged", k);
        out.X[k + 1] = next;
    }
}

/// Homogeneous linearisation dY = A Y dt + B Y dW + int M Y Ntilde with
/// A = b(t, rho), B = C_t, M = F_{t,z}; Y_0 = 1. Uses the bundle's noise.
inline void variation_path(const PathContext& ctx, PathBundle& b) {
    const auto& c = ctx.coefficients();
    const auto& spec = ctx.spec();
    const std::size_t n = ctx.grid().steps;
    const double dt = ctx.grid().dt();
    const double comp = ctx.options().compensated ? spec.nu * dt : 0.0;
    const auto& jumps = b.noise.jumps;

    b.Y.resize(n + 1);
    b.Y[0] = 1.0;
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double jump_sum = 0.0;
        for (; j < jumps.size() && jumps[j].step == k; ++j) {
            const double M = spec.jump_F(ctx.grid().time(k), jumps[j].mark);
            if (!(1.0 + M > 0.0)) throw SimulationError("variation process lost positivity", k);
            jump_sum += M;
        }
        const double m = 1.0 + c.A[k] * dt + c.B[k] * b.noise.dW[k] + jump_sum - comp * c.mean_F[k];
        b.Y[k + 1] = b.Y[k] * m;
        if (!std::isfinite(b.Y[k + 1])) throw SimulationError("path diverged", k);
    }
}

/// du = A* Y^{-1} dt + beta Y^{-1} dW + int M* Y^{-1} Ntilde with
/// A* = alpha - beta B - int M gamma / (1 + M) mu(dz), M* = gamma / (1 + M),
/// alpha = d_rho b * X * d rho/dx. Sets flow = Y u.
inline void auxiliary_path(const PathContext& ctx, PathBundle& b) {
    const auto& c = ctx.coefficients();
    const auto& spec = ctx.spec();
    const std::size_t n = ctx.grid().steps;
    const double dt = ctx.grid().dt();
    const bool compensated = ctx.options().compensated;
    const auto& jumps = b.noise.jumps;

    b.u.resize(n + 1);
    b.flow.resize(n + 1);
    b.u[0] = 1.0;
    b.flow[0] = b.Y[0];
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double y = b.Y[k];
        if (std::abs(y) < kSingularVariation) throw SimulationError("variation process numerically singular", k);
        const double t = ctx.grid().time(k);
        double jump_sum = 0.0;
        for (; j < jumps.size() && jumps[j].step == k; ++j) {
            const double z = jumps[j].mark;
            const double M = spec.jump_F(t, z);
            const double gamma = spec.lambda0_deta(t, z, c.eta[k]) * c.deta[k];
            jump_sum += gamma / (1.0 + M);
        }
        const double alpha = c.alpha_coef[k] * b.X[k];
        double a_star = alpha - c.beta[k] * c.B[k];
        double drift_jumps = 0.0;
        if (compensated) {
            a_star -= spec.nu * c.mean_F_gamma_over[k];
            drift_jumps = spec.nu * c.mean_gamma_over[k];
        }
        b.u[k + 1] = b.u[k] + (a_star * dt + c.beta[k] * b.noise.dW[k] + jump_sum - dt * drift_jumps) / y;
        b.flow[k + 1] = b.Y[k + 1] * b.u[k + 1];
    }
}

inline PathBundle simulate_path(const PathContext& ctx, const Noise& noise) {
    PathBundle b;
    euler_path(ctx, noise, b);
    variation_path(ctx, b);
    auxiliary_path(ctx, b);
    path_extrema(b);
    return b;
}

inline PathBundle simulate_path(const PathContext& ctx, const RngConfig& rng) {
    return simulate_path(ctx, ctx.sample(rng));
}

// ============================================================================
// Malliavin derivative of the state
// ============================================================================

/// D_{r,z} X_t = Y_t Y_r^{-1} lambda(r, X_r, z, eta_r) for t >= r, zero before.
inline std::vector<double> malliavin_derivative(const PathContext& ctx, const PathBundle& b, std::size_t r,
                                                double z) {
    if (r >= b.X.size()) throw ModelError("Malliavin derivative index outside the grid");
    const double yr = b.Y[r];
    if (std::abs(yr) < kSingularVariation) throw SimulationError("variation process numerically singular", r);
    const double lam = ctx.jump_coefficient(std::min(r, ctx.grid().steps), b.X[r], z);
    std::vector<double> d(b.X.size(), 0.0);
    for (std::size_t t = r; t < d.size(); ++t) d[t] = b.Y[t] / yr * lam;
    return d;
}

/// D_{r,z} X_T only.
inline double malliavin_derivative_terminal(const PathContext& ctx, const PathBundle& b, std::size_t r, double z) {
    if (r >= b.X.size()) throw ModelError("Malliavin derivative index outside the grid");
    const double yr = b.Y[r];
    if (std::abs(yr) < kSingularVariation) throw SimulationError("variation process numerically singular", r);
    return b.Y.back() / yr * ctx.jump_coefficient(r, b.X[r], z);
}

}  // namespace mfj
