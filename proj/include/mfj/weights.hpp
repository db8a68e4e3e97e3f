// SPDX-License-Identifier: MIT
//
// Malliavin weight fields omega(t, z) for terminal and barrier payoffs, and the
// pathwise evaluation of their Skorokhod integral against Ntilde.
//
// The field is built so that omega(t,z) * D_{t,z}Phi integrates (over
// mu(dz) dt) to the pathwise Delta integrand, i.e. for a terminal payoff
//
//   omega(t,z) = Phi'(X_T) Y_T u_T / (Q [Phi(X_T + D_{t,z}X_T) - Phi(X_T)]),
//
// with Q = nu T. Delta = E[Phi * delta(omega)] then follows from duality.
#pragma once

#include "mfj/error.hpp"
#include "mfj/hull.hpp"
#include "mfj/noise.hpp"
#include "mfj/payoff.hpp"
#include "mfj/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace mfj {

inline constexpr double kWeightDenominatorGuard = 1e-12;

struct WeightValue {
    double value = 0.0;
    bool guarded = false;
};

// ============================================================================
// Scalar building blocks
// ============================================================================

/// D_{t,z} max X = sup_s {X_s + shift_s 1_{t <= s}} - max X.
inline double d_max(std::span<const double> X, std::span<const double> shift, std::size_t t_index) {
    double orig = -std::numeric_limits<double>::infinity();
    double shifted = orig;
    for (std::size_t s = 0; s < X.size(); ++s) {
        orig = std::max(orig, X[s]);
        shifted = std::max(shifted, s >= t_index ? X[s] + shift[s] : X[s]);
    }
    return shifted - orig;
}

/// D_{t,z} min X = inf_s {X_s + shift_s 1_{t <= s}} - min X.
inline double d_min(std::span<const double> X, std::span<const double> shift, std::size_t t_index) {
    double orig = std::numeric_limits<double>::infinity();
    double shifted = orig;
    for (std::size_t s = 0; s < X.size(); ++s) {
        orig = std::min(orig, X[s]);
        shifted = std::min(shifted, s >= t_index ? X[s] + shift[s] : X[s]);
    }
    return shifted - orig;
}

namespace detail {

inline WeightValue guarded_ratio(double numerator, double denominator) {
    if (numerator == 0.0) return {};
    if (std::abs(denominator) < kWeightDenominatorGuard) return {0.0, true};
    return {numerator / denominator, false};
}

}  // namespace detail

/// Terminal-payoff weight at one point given X_T, the flow Y_T u_T and D_{t,z}X_T.
inline WeightValue terminal_weight_value(const Payoff& payoff, double x_T, double flow_T, double d_T, double q) {
    const double num = payoff.derivative(x_T) * flow_T;
    if (num == 0.0) return {};
    return detail::guarded_ratio(num, q * (payoff.value(x_T + d_T) - payoff.value(x_T)));
}

/// European call weight: on {X_T > K}, Y_T u_T / (Q D) if D >= K - X_T and
/// Y_T u_T / (Q (K - X_T)) otherwise; zero on {X_T <= K}.
inline WeightValue european_weight_value(double x_T, double flow_T, double d_T, double K, double q) {
    return terminal_weight_value(Payoff::call(K), x_T, flow_T, d_T, q);
}

/// Up-and-out weight from the original and shifted running maxima.
inline WeightValue up_and_out_weight_value(double run_max, double flow_at_argmax, double shifted_max, double K,
                                           double B, double q) {
    if (!(run_max < B) || !(run_max > K)) return {};
    const Payoff p = Payoff::up_and_out(K, B);
    return detail::guarded_ratio(flow_at_argmax, q * (p.value(shifted_max) - p.value(run_max)));
}

/// Down-and-out weight from the original and shifted running minima.
inline WeightValue down_and_out_weight_value(double run_min, double flow_at_argmin, double shifted_min, double K,
                                             double B, double q) {
    if (!(run_min > B) || !(run_min > K)) return {};
    const Payoff p = Payoff::down_and_out(K, B);
    return detail::guarded_ratio(flow_at_argmin, q * (p.value(shifted_min) - p.value(run_min)));
}

/// Payoff whose weight is used for `p`. The digital has no a.e. derivative,
/// so it borrows the identity-payoff weight Y_T u_T / (Q D_{t,z}X_T).
[[nodiscard]] inline Payoff weight_payoff_for(const Payoff& p) {
    return p.kind == PayoffKind::digital ? Payoff::identity() : p;
}

// ============================================================================
// WeightField
// ============================================================================

/// Lazy evaluator of omega(t_k, z) bound to one path. Holds references to the
/// context and bundle; both must outlive the field.
class WeightField {
public:
    enum class Kind { terminal, up_and_out, down_and_out, constant };

    /// Field for `payoff` (for the digital, see weight_payoff_for).
    WeightField(const PathContext& ctx, const PathBundle& b, const Payoff& payoff)
        : ctx_(&ctx), b_(&b), payoff_(payoff) {
        q_ = ctx.spec().q_total();
        if (!(q_ > 0.0)) throw WeightError("Malliavin weight undefined for jump-free model");
        switch (payoff.argument()) {
            case PayoffArgument::terminal: kind_ = Kind::terminal; break;
            case PayoffArgument::running_max: kind_ = Kind::up_and_out; break;
            case PayoffArgument::running_min: kind_ = Kind::down_and_out; break;
        }
        init();
    }

    /// omega identically equal to `c` (test and diagnostics use).
    static WeightField constant(const PathContext& ctx, const PathBundle& b, double c) {
        WeightField f(ctx, b);
        f.kind_ = Kind::constant;
        f.constant_ = c;
        return f;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double q_total() const noexcept { return q_; }
    [[nodiscard]] const Payoff& payoff() const noexcept { return payoff_; }
    [[nodiscard]] const PathBundle& bundle() const noexcept { return *b_; }
    [[nodiscard]] const PathContext& context() const noexcept { return *ctx_; }

    /// True when omega vanishes for every (t, z) on this path.
    [[nodiscard]] bool vanishes() const noexcept { return prefactor_ == 0.0 && kind_ != Kind::constant; }

    /// omega(t_k, z) for an arbitrary mark.
    [[nodiscard]] WeightValue operator()(std::size_t k, double z) const {
        if (kind_ == Kind::constant) return {constant_, false};
        if (vanishes()) return {};
        const double lam = ctx_->jump_coefficient(k, b_->X[k], z);
        return evaluate(k, lam);
    }

    /// omega(t_k, z_n) at quadrature node n.
    [[nodiscard]] WeightValue at_node(std::size_t k, std::size_t n) const {
        if (kind_ == Kind::constant) return {constant_, false};
        if (vanishes()) return {};
        return evaluate(k, ctx_->jump_coefficient_node(k, n, b_->X[k]));
    }

    struct Compensator {
        double value = 0.0;
        long guard_hits = 0;
    };

    /// nu * sum_k dt * E_z omega(t_k, Z) with the mark expectation by quadrature.
    [[nodiscard]] Compensator compensator() const {
        const auto& grid = ctx_->grid();
        const double nu = ctx_->spec().nu;
        const double dt = grid.dt();
        Compensator c;
        if (kind_ == Kind::constant) {
            c.value = nu * grid.horizon * constant_;
            return c;
        }
        if (vanishes()) return c;
        if (kind_ == Kind::terminal) {
            accumulate_terminal(c);
        } else {
            accumulate_barrier(c);
        }
        c.value *= nu * dt;
        return c;
    }

private:
    WeightField(const PathContext& ctx, const PathBundle& b) : ctx_(&ctx), b_(&b), q_(ctx.spec().q_total()) {}

    void init() {
        const PathBundle& b = *b_;
        const std::size_t N = b.last();
        switch (kind_) {
            case Kind::terminal:
                prefactor_ = payoff_.derivative(b.X[N]) * b.flow[N];
                break;
            case Kind::up_and_out:
                if (b.run_max < payoff_.B && b.run_max > payoff_.K) prefactor_ = b.flow[b.argmax_index];
                break;
            case Kind::down_and_out:
                if (b.run_min > payoff_.B && b.run_min > payoff_.K) prefactor_ = b.flow[b.argmin_index];
                break;
            case Kind::constant: break;
        }
        if (prefactor_ != 0.0 && (kind_ == Kind::up_and_out || kind_ == Kind::down_and_out)) {
            // prefix_[k] = extremum of X over s < k.
            const bool up = kind_ == Kind::up_and_out;
            prefix_.assign(N + 1, up ? -std::numeric_limits<double>::infinity()
                                     : std::numeric_limits<double>::infinity());
            for (std::size_t k = 1; k <= N; ++k) {
                prefix_[k] = up ? std::max(prefix_[k - 1], b.X[k - 1]) : std::min(prefix_[k - 1], b.X[k - 1]);
            }
        }
    }

    [[nodiscard]] WeightValue evaluate(std::size_t k, double lam) const {
        const PathBundle& b = *b_;
        const std::size_t N = b.last();
        const double yk = b.Y[k];
        if (std::abs(yk) < kSingularVariation) return {0.0, true};
        if (kind_ == Kind::terminal) {
            const double d_T = b.Y[N] / yk * lam;
            return terminal_weight_value(payoff_, b.X[N], b.flow[N], d_T, q_);
        }
        const double c = lam / yk;
        const bool up = kind_ == Kind::up_and_out;
        double ext = prefix_[k];
        for (std::size_t s = k; s <= N; ++s) {
            const double v = b.X[s] + c * b.Y[s];
            ext = up ? std::max(ext, v) : std::min(ext, v);
        }
        return barrier_value(ext);
    }

    [[nodiscard]] WeightValue barrier_value(double shifted) const {
        if (kind_ == Kind::up_and_out) {
            return up_and_out_weight_value(b_->run_max, prefactor_, shifted, payoff_.K, payoff_.B, q_);
        }
        return down_and_out_weight_value(b_->run_min, prefactor_, shifted, payoff_.K, payoff_.B, q_);
    }

    void accumulate_terminal(Compensator& c) const {
        const PathBundle& b = *b_;
        const auto& coef = ctx_->coefficients();
        const std::size_t nn = coef.n_nodes();
        const std::size_t steps = ctx_->grid().steps;
        for (std::size_t k = 0; k < steps; ++k) {
            double row = 0.0;
            const std::size_t count = coef.mark_independent[k] ? 1 : nn;
            for (std::size_t n = 0; n < count; ++n) {
                const WeightValue w = evaluate(k, ctx_->jump_coefficient_node(k, n, b.X[k]));
                if (w.guarded) c.guard_hits += coef.mark_independent[k] ? static_cast<long>(nn) : 1;
                row += (coef.mark_independent[k] ? 1.0 : coef.mark_weights[n]) * w.value;
            }
            c.value += row;
        }
    }

    // Sweep k downwards keeping the envelope of s -> X_s + c Y_s for s >= k,
    // so each shifted extremum costs one envelope query.
    void accumulate_barrier(Compensator& c) const {
        const PathBundle& b = *b_;
        const auto& coef = ctx_->coefficients();
        const std::size_t nn = coef.n_nodes();
        const std::size_t N = b.last();
        const bool up = kind_ == Kind::up_and_out;
        const double sign = up ? 1.0 : -1.0;
        detail::LineEnvelope env;
        env.add(sign * b.Y[N], sign * b.X[N]);
        for (std::size_t kk = N; kk-- > 0;) {
            env.add(sign * b.Y[kk], sign * b.X[kk]);
            const double yk = b.Y[kk];
            double row = 0.0;
            const std::size_t count = coef.mark_independent[kk] ? 1 : nn;
            for (std::size_t n = 0; n < count; ++n) {
                WeightValue w;
                if (std::abs(yk) < kSingularVariation) {
                    w = {0.0, true};
                } else {
                    const double cc = ctx_->jump_coefficient_node(kk, n, b.X[kk]) / yk;
                    const double suffix = sign * env.max_at(cc);
                    const double ext = up ? std::max(prefix_[kk], suffix) : std::min(prefix_[kk], suffix);
                    w = barrier_value(ext);
                }
                if (w.guarded) c.guard_hits += coef.mark_independent[kk] ? static_cast<long>(nn) : 1;
                row += (coef.mark_independent[kk] ? 1.0 : coef.mark_weights[n]) * w.value;
            }
            c.value += row;
        }
    }

    const PathContext* ctx_;
    const PathBundle* b_;
    Payoff payoff_{};
    Kind kind_ = Kind::terminal;
    double q_ = 0.0;
    double prefactor_ = 0.0;
    double constant_ = 0.0;
    std::vector<double> prefix_;
};

/// Weight for the European call with strike K.
inline WeightField european_weight(const PathContext& ctx, const PathBundle& b, double K) {
    return WeightField(ctx, b, Payoff::call(K));
}

inline WeightField barrier_uo_weight(const PathContext& ctx, const PathBundle& b, double K, double B) {
    return WeightField(ctx, b, Payoff::up_and_out(K, B));
}

inline WeightField barrier_do_weight(const PathContext& ctx, const PathBundle& b, double K, double B) {
    return WeightField(ctx, b, Payoff::down_and_out(K, B));
}

// ============================================================================
// Skorokhod integral
// ============================================================================

enum class SkorokhodMode {
    /// Poisson-space Skorokhod integral: at each event, omega is evaluated on
    /// the path with that event removed. Correct for anticipating omega.
    jump_removal,
    /// omega evaluated on the observed path at every event. Coincides with
    /// jump_removal only for adapted (non-anticipating) omega.
    pathwise,
};

struct SkorokhodResult {
    double value = 0.0;
    double jump_sum = 0.0;
    double compensator = 0.0;
    long guard_hits = 0;
};

/// delta(omega) = jump_sum - compensator on the field's path.
inline SkorokhodResult skorokhod_integral(const WeightField& field, SkorokhodMode mode = SkorokhodMode::jump_removal) {
    const PathContext& ctx = field.context();
    const PathBundle& b = field.bundle();
    SkorokhodResult r;
    const auto comp = field.compensator();
    r.compensator = comp.value;
    r.guard_hits = comp.guard_hits;

    const auto& jumps = b.noise.jumps;
    for (std::size_t j = 0; j < jumps.size(); ++j) {
        WeightValue w;
        if (mode == SkorokhodMode::pathwise || field.kind() == WeightField::Kind::constant) {
            w = field(jumps[j].step, jumps[j].mark);
        } else {
            const PathBundle reduced = simulate_path(ctx, without_event(b.noise, j));
            const WeightField f(ctx, reduced, field.payoff());
            w = f(jumps[j].step, jumps[j].mark);
        }
        if (w.guarded) ++r.guard_hits;
        r.jump_sum += w.value;
    }
    r.value = r.jump_sum - r.compensator;
    return r;
}

}  // namespace mfj
