// SPDX-License-Identifier: MIT
//
// Delta estimators: Malliavin weight E[Phi delta(omega)], pathwise flow
// E[Phi' dX/dx], and finite differences on common random numbers. All
// estimators store per-path samples by index and reduce them in a fixed tree,
// so results do not depend on the worker count.
#pragma once

#include "mfj/error.hpp"
#include "mfj/model.hpp"
#include "mfj/parallel.hpp"
#include "mfj/payoff.hpp"
#include "mfj/rng.hpp"
#include "mfj/simulate.hpp"
#include "mfj/stats.hpp"
#include "mfj/weights.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfj {

enum class DeltaMethod { malliavin, flow_pathwise, fd_central };

[[nodiscard]] inline std::string_view to_string(DeltaMethod m) {
    switch (m) {
        case DeltaMethod::malliavin: return "malliavin";
        case DeltaMethod::flow_pathwise: return "flow_pathwise";
        case DeltaMethod::fd_central: return "fd_central";
    }
    return "unknown";
}

inline DeltaMethod delta_method_from_string(std::string_view s) {
    for (auto m : {DeltaMethod::malliavin, DeltaMethod::flow_pathwise, DeltaMethod::fd_central}) {
        if (to_string(m) == s) return m;
    }
    throw EstimatorError("unknown method '" + std::string(s) + "'");
}

struct DeltaEstimate {
    DeltaMethod method = DeltaMethod::malliavin;
    Payoff payoff{};
    double x0 = 0.0;
    double nu = 0.0;
    double dt = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double variance = 0.0;
    long guard_hits = 0;
    long runtime_ms = 0;
    std::vector<std::string> warnings;
};

struct EstimatorOptions {
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: default_threads()
};

struct MalliavinOptions {
    SkorokhodMode mode = SkorokhodMode::jump_removal;
};

enum class FdMode { central, forward };

struct FdOptions {
    double h = 1e-3;
    FdMode mode = FdMode::central;
    /// Draw the shifted side from a different seed instead of sharing noise.
    bool independent_streams = false;
};

inline constexpr double kFdNoiseWarningStep = 1e-8;

namespace detail {

using Clock = std::chrono::steady_clock;

inline long elapsed_ms(Clock::time_point start) {
    return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count());
}

inline void check_paths(std::size_t n) {
    if (n < 2) throw EstimatorError("at least two paths are needed to estimate the variance");
}

inline DeltaEstimate finish(DeltaMethod method, const PathContext& ctx, const Payoff& payoff,
                            const EstimatorOptions& opt, const std::vector<double>& samples,
                            const std::vector<long>& guards, Clock::time_point start) {
    DeltaEstimate e;
    e.method = method;
    e.payoff = payoff;
    e.x0 = ctx.spec().x0;
    e.nu = ctx.spec().nu;
    e.dt = ctx.grid().dt();
    e.n_paths = opt.n_paths;
    e.seed = opt.seed;
    const Moments m = tree_moments(samples);
    e.mean = m.mean;
    e.variance = m.variance();
    e.std_error = std::sqrt(e.variance / static_cast<double>(m.n));
    e.guard_hits = std::accumulate(guards.begin(), guards.end(), 0L);
    e.runtime_ms = elapsed_ms(start);
    if (!std::isfinite(e.mean) || !std::isfinite(e.variance)) {
        throw EstimatorError("estimate is not finite");
    }
    return e;
}

/// Seed for the second stream of an independent-stream difference.
inline std::uint64_t shifted_seed(std::uint64_t seed) { return mix64(seed ^ 0xA0761D6478BD642FULL); }

}  // namespace detail

/// Per-path Malliavin sample Phi * delta(omega). Guard hits are added to
/// *guard_hits when given.
inline double malliavin_sample(const PathContext& ctx, const PathBundle& b, const Payoff& payoff,
                               const MalliavinOptions& mopt, long* guard_hits = nullptr) {
    const double phi = payoff(b);
    if (phi == 0.0) return 0.0;
    const WeightField field(ctx, b, weight_payoff_for(payoff));
    const SkorokhodResult r = skorokhod_integral(field, mopt.mode);
    if (guard_hits) *guard_hits += r.guard_hits;
    return phi * r.value;
}

/// Per-path pathwise sample Phi'(argument) * d argument / dx.
inline double flow_sample(const PathBundle& b, const Payoff& payoff) {
    return payoff.derivative(payoff.argument_of(b)) * payoff.argument_flow(b);
}

inline void require_flow_supported(const Payoff& payoff) {
    if (payoff.kind == PayoffKind::digital) throw EstimatorError("pathwise method invalid for discontinuous payoff");
}

/// Delta = E[Phi * delta(omega)].
inline DeltaEstimate delta_malliavin(const PathContext& ctx, const Payoff& payoff, const EstimatorOptions& opt,
                                     const MalliavinOptions& mopt = {}) {
    const auto start = detail::Clock::now();
    payoff.validate();
    detail::check_paths(opt.n_paths);
    if (!(ctx.spec().q_total() > 0.0)) throw WeightError("Malliavin weight undefined for jump-free model");
    std::vector<double> samples(opt.n_paths);
    std::vector<long> guards(opt.n_paths, 0);
    parallel_for(opt.n_paths, opt.threads, [&](std::size_t i) {
        const PathBundle b = simulate_path(ctx, RngConfig{opt.seed, i});
        samples[i] = malliavin_sample(ctx, b, payoff, mopt, &guards[i]);
    });
    return detail::finish(DeltaMethod::malliavin, ctx, payoff, opt, samples, guards, start);
}

/// Delta = E[Phi'(X_T) Y_T u_T] (terminal) or E[Phi'(max) flow_argmax] (barrier).
inline DeltaEstimate delta_flow_pathwise(const PathContext& ctx, const Payoff& payoff, const EstimatorOptions& opt) {
    const auto start = detail::Clock::now();
    payoff.validate();
    require_flow_supported(payoff);
    detail::check_paths(opt.n_paths);
    std::vector<double> samples(opt.n_paths);
    std::vector<long> guards(opt.n_paths, 0);
    parallel_for(opt.n_paths, opt.threads, [&](std::size_t i) {
        const PathBundle b = simulate_path(ctx, RngConfig{opt.seed, i});
        samples[i] = flow_sample(b, payoff);
    });
    return detail::finish(DeltaMethod::flow_pathwise, ctx, payoff, opt, samples, guards, start);
}

/// Context for the same model started at x0 + shift; the mean curve is re-solved.
inline PathContext shifted_context(const PathContext& ctx, double shift) {
    ModelSpec s = ctx.spec();
    s.x0 += shift;
    if (s.x0 == 0.0) throw EstimatorError("shifted initial value is zero");
    return PathContext(s, ctx.grid(), ctx.options());
}

/// (E Phi(x0+h) - E Phi(x0-h)) / 2h; forward mode uses (E Phi(x0+h) - E Phi(x0)) / h.
inline DeltaEstimate delta_fd_central(const PathContext& ctx, const Payoff& payoff, const EstimatorOptions& opt,
                                      const FdOptions& fd = {}) {
    const auto start = detail::Clock::now();
    payoff.validate();
    detail::check_paths(opt.n_paths);
    if (!(fd.h > 0.0)) throw EstimatorError("finite-difference step must be positive");
    const bool central = fd.mode == FdMode::central;
    const PathContext up = shifted_context(ctx, fd.h);
    const PathContext down = central ? shifted_context(ctx, -fd.h) : ctx;
    const double denom = central ? 2.0 * fd.h : fd.h;
    const std::uint64_t other_seed = fd.independent_streams ? detail::shifted_seed(opt.seed) : opt.seed;

    std::vector<double> samples(opt.n_paths);
    std::vector<long> guards(opt.n_paths, 0);
    parallel_for(opt.n_paths, opt.threads, [&](std::size_t i) {
        const Noise noise = ctx.sample(RngConfig{opt.seed, i});
        const double hi = payoff(simulate_path(up, noise));
        const double lo = fd.independent_streams ? payoff(simulate_path(down, RngConfig{other_seed, i}))
                                                 : payoff(simulate_path(down, noise));
        samples[i] = (hi - lo) / denom;
    });
    DeltaEstimate e = detail::finish(DeltaMethod::fd_central, ctx, payoff, opt, samples, guards, start);
    if (fd.h < kFdNoiseWarningStep) e.warnings.emplace_back("finite-difference step below 1e-8 amplifies noise");
    return e;
}

// ============================================================================
// Variance report
// ============================================================================

struct ComparisonRow {
    DeltaEstimate estimate;
    double variance_ratio = 1.0;
    double stderr_ratio = 1.0;
    double runtime_ratio = 0.0;  // 0 when the first runtime is not measured
};

/// Ratios of every estimate against the first. All estimates must share the
/// payoff, path count, step and seed.
inline std::vector<ComparisonRow> variance_report(const std::vector<DeltaEstimate>& estimates) {
    if (estimates.size() < 2) throw EstimatorError("comparison needs at least two estimates");
    const DeltaEstimate& ref = estimates.front();
    for (const auto& e : estimates) {
        const bool same = e.payoff.kind == ref.payoff.kind && e.payoff.K == ref.payoff.K &&
                          e.payoff.B == ref.payoff.B && e.payoff.epsilon == ref.payoff.epsilon &&
                          e.n_paths == ref.n_paths && e.dt == ref.dt && e.seed == ref.seed;
        if (!same) throw EstimatorError("refusing to compare estimates with mismatched configurations");
    }
    std::vector<ComparisonRow> rows;
    rows.reserve(estimates.size());
    for (const auto& e : estimates) {
        ComparisonRow r{e};
        r.variance_ratio = ref.variance > 0.0 ? e.variance / ref.variance : (e.variance == 0.0 ? 1.0 : INFINITY);
        r.stderr_ratio = ref.std_error > 0.0 ? e.std_error / ref.std_error : (e.std_error == 0.0 ? 1.0 : INFINITY);
        r.runtime_ratio = ref.runtime_ms > 0 ? static_cast<double>(e.runtime_ms) / static_cast<double>(ref.runtime_ms)
                                             : 0.0;
        rows.push_back(r);
    }
    return rows;
}

// ============================================================================
// Convergence study
// ============================================================================

enum class ConvergenceQuantity { state, malliavin_derivative, delta_euro, delta_barrier };

[[nodiscard]] inline std::string_view to_string(ConvergenceQuantity q) {
    switch (q) {
        case ConvergenceQuantity::state: return "state";
        case ConvergenceQuantity::malliavin_derivative: return "malliavin_derivative";
        case ConvergenceQuantity::delta_euro: return "delta_euro";
        case ConvergenceQuantity::delta_barrier: return "delta_barrier";
    }
    return "unknown";
}

inline ConvergenceQuantity convergence_quantity_from_string(std::string_view s) {
    for (auto q : {ConvergenceQuantity::state, ConvergenceQuantity::malliavin_derivative,
                   ConvergenceQuantity::delta_euro, ConvergenceQuantity::delta_barrier}) {
        if (to_string(q) == s) return q;
    }
    throw EstimatorError("unknown convergence quantity '" + std::string(s) + "'");
}

struct ConvergenceOptions {
    std::size_t n_paths = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    SimOptions sim{};
    /// Payoff for the delta quantities.
    Payoff payoff = Payoff::call(0.5);
    /// (r, z) of D_{r,z} X_T for the malliavin_derivative quantity.
    double r_time = 0.5;
    double z_mark = 0.25;
    MalliavinOptions malliavin{};
};

struct ConvergenceLevel {
    double dt = 0.0;
    /// RMS pathwise error for state quantities, |mean difference| for deltas.
    double rms_error = 0.0;
    /// Standard error of the mean difference (delta quantities only).
    double std_error = 0.0;
};

struct ConvergenceResult {
    ConvergenceQuantity quantity = ConvergenceQuantity::state;
    std::vector<ConvergenceLevel> levels;
    double dt_ref = 0.0;
    std::size_t n_paths = 0;
    double slope = 0.0;
};

inline constexpr std::size_t kReferenceRefinement = 64;

/// Least-squares slope of log(error) against log(dt). Zero errors are
/// floored at the smallest positive double.
[[nodiscard]] inline double log_log_slope(const std::vector<ConvergenceLevel>& levels) {
    const double n = static_cast<double>(levels.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& l : levels) {
        const double x = std::log(l.dt);
        const double y = std::log(std::max(l.rms_error, std::numeric_limits<double>::min()));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

/// Errors of each level against a reference grid dt_ref = min(dt_list)/64
/// driven by the same noise: Brownian increments are summed and jump events
/// keep their marks when moved to the coarse grid.
inline ConvergenceResult convergence_study(const ModelSpec& spec, ConvergenceQuantity quantity,
                                           const std::vector<double>& dt_list, const ConvergenceOptions& opt) {
    if (dt_list.size() < 3) throw EstimatorError("convergence study needs at least three levels");
    detail::check_paths(opt.n_paths);
    const double dt_min = *std::min_element(dt_list.begin(), dt_list.end());
    const double dt_ref = dt_min / static_cast<double>(kReferenceRefinement);
    const TimeGrid ref_grid = TimeGrid::with_step(spec.horizon, dt_ref);
    const PathContext ref_ctx(spec, ref_grid, opt.sim);

    std::vector<PathContext> levels;
    std::vector<std::size_t> factors;
    for (double dt : dt_list) {
        const TimeGrid g = TimeGrid::with_step(spec.horizon, dt);
        if (ref_grid.steps % g.steps != 0) throw EstimatorError("level does not divide the reference grid");
        factors.push_back(ref_grid.steps / g.steps);
        levels.emplace_back(spec, g, opt.sim);
    }

    const bool is_delta = quantity == ConvergenceQuantity::delta_euro || quantity == ConvergenceQuantity::delta_barrier;
    Payoff payoff = opt.payoff;
    if (quantity == ConvergenceQuantity::delta_euro && payoff.has_barrier()) payoff = Payoff::call(payoff.K);
    if (quantity == ConvergenceQuantity::delta_barrier && !payoff.has_barrier()) {
        throw EstimatorError("barrier delta convergence needs a barrier payoff");
    }
    if (is_delta) payoff.validate();

    // r index on each grid; r_time must be a grid point of every level.
    auto r_index = [&](const TimeGrid& g) {
        const double ratio = opt.r_time / g.dt();
        const double n = std::round(ratio);
        if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio) || n < 0.0 || n > static_cast<double>(g.steps)) {
            throw EstimatorError("r_time is not a point of every grid");
        }
        return static_cast<std::size_t>(n);
    };
    auto evaluate = [&](const PathContext& ctx, const Noise& noise) {
        const PathBundle b = simulate_path(ctx, noise);
        switch (quantity) {
            case ConvergenceQuantity::state: return b.X.back();
            case ConvergenceQuantity::malliavin_derivative:
                return malliavin_derivative_terminal(ctx, b, r_index(ctx.grid()), opt.z_mark);
            default: return malliavin_sample(ctx, b, payoff, opt.malliavin);
        }
    };

    const std::size_t L = levels.size();
    std::vector<double> diffs(L * opt.n_paths);
    parallel_for(opt.n_paths, opt.threads, [&](std::size_t i) {
        const Noise fine = ref_ctx.sample(RngConfig{opt.seed, i});
        const double ref = evaluate(ref_ctx, fine);
        for (std::size_t l = 0; l < L; ++l) {
            const Noise coarse = coarsen(fine, levels[l].grid(), factors[l]);
            diffs[l * opt.n_paths + i] = evaluate(levels[l], coarse) - ref;
        }
    });

    ConvergenceResult res;
    res.quantity = quantity;
    res.dt_ref = dt_ref;
    res.n_paths = opt.n_paths;
    for (std::size_t l = 0; l < L; ++l) {
        const std::span<const double> d(diffs.data() + l * opt.n_paths, opt.n_paths);
        ConvergenceLevel lev;
        lev.dt = dt_list[l];
        if (is_delta) {
            const Moments m = tree_moments(d);
            lev.rms_error = std::abs(m.mean);
            lev.std_error = m.stderr_of_mean();
        } else {
            std::vector<double> sq(d.size());
            std::transform(d.begin(), d.end(), sq.begin(), [](double x) { return x * x; });
            lev.rms_error = std::sqrt(tree_moments(sq).mean);
        }
        res.levels.push_back(lev);
    }
    res.slope = log_log_slope(res.levels);
    return res;
}

}  // namespace mfj
