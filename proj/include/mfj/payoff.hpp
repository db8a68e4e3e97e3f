// SPDX-License-Identifier: MIT
#pragma once

#include "mfj/error.hpp"
#include "mfj/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

namespace mfj {

enum class PayoffKind {
    european_call,
    digital,
    up_and_out_call,
    down_and_out_call,
    smoothed_call,
    identity,  // Phi = X_T
    constant,  // Phi = K
};

/// Whether the payoff reads X_T, the running max or the running min.
enum class PayoffArgument { terminal, running_max, running_min };

struct Payoff {
    PayoffKind kind = PayoffKind::european_call;
    double K = 0.0;
    double B = 0.0;
    double epsilon = 1e-2;

    static Payoff call(double K) { return {PayoffKind::european_call, K, 0.0, 1e-2}; }
    static Payoff digital(double K) { return {PayoffKind::digital, K, 0.0, 1e-2}; }
    static Payoff up_and_out(double K, double B) { return {PayoffKind::up_and_out_call, K, B, 1e-2}; }
    static Payoff down_and_out(double K, double B) { return {PayoffKind::down_and_out_call, K, B, 1e-2}; }
    static Payoff smoothed_call(double K, double eps) { return {PayoffKind::smoothed_call, K, 0.0, eps}; }
    static Payoff identity() { return {PayoffKind::identity, 0.0, 0.0, 1e-2}; }
    static Payoff constant(double c) { return {PayoffKind::constant, c, 0.0, 1e-2}; }

    [[nodiscard]] PayoffArgument argument() const noexcept {
        switch (kind) {
            case PayoffKind::up_and_out_call: return PayoffArgument::running_max;
            case PayoffKind::down_and_out_call: return PayoffArgument::running_min;
            default: return PayoffArgument::terminal;
        }
    }

    [[nodiscard]] bool has_barrier() const noexcept { return argument() != PayoffArgument::terminal; }

    void validate() const {
        const bool strike_based = kind != PayoffKind::identity && kind != PayoffKind::constant;
        if (strike_based && !(K > 0.0)) throw EstimatorError("strike must be positive");
        if (kind == PayoffKind::up_and_out_call && !(B > K)) {
            throw EstimatorError("up-and-out barrier must lie above the strike");
        }
        if (kind == PayoffKind::smoothed_call && !(epsilon > 0.0)) {
            throw EstimatorError("smoothing width must be positive");
        }
    }

    /// Payoff as a function of its single argument (X_T, max or min).
    [[nodiscard]] double value(double x) const noexcept {
        switch (kind) {
            case PayoffKind::european_call: return std::max(x - K, 0.0);
            case PayoffKind::digital: return x > K ? 1.0 : 0.0;
            case PayoffKind::up_and_out_call: return x < B ? std::max(x - K, 0.0) : 0.0;
            case PayoffKind::down_and_out_call: return x > B ? std::max(x - K, 0.0) : 0.0;
            case PayoffKind::smoothed_call: {
                // (x - K)^+ convolved with the uniform density on [-eps/2, eps/2].
                const double lo = K - 0.5 * epsilon;
                if (x <= lo) return 0.0;
                if (x >= K + 0.5 * epsilon) return x - K;
                return (x - lo) * (x - lo) / (2.0 * epsilon);
            }
            case PayoffKind::identity: return x;
            case PayoffKind::constant: return K;
        }
        return 0.0;
    }

    /// Almost-everywhere derivative in the argument. The digital's is zero.
    [[nodiscard]] double derivative(double x) const noexcept {
        switch (kind) {
            case PayoffKind::european_call: return x > K ? 1.0 : 0.0;
            case PayoffKind::digital: return 0.0;
            case PayoffKind::up_and_out_call: return (x > K && x < B) ? 1.0 : 0.0;
            case PayoffKind::down_and_out_call: return (x > K && x > B) ? 1.0 : 0.0;
            case PayoffKind::smoothed_call:
                return std::clamp((x - K + 0.5 * epsilon) / epsilon, 0.0, 1.0);
            case PayoffKind::identity: return 1.0;
            case PayoffKind::constant: return 0.0;
        }
        return 0.0;
    }

    [[nodiscard]] double argument_of(const PathBundle& b) const noexcept {
        switch (argument()) {
            case PayoffArgument::running_max: return b.run_max;
            case PayoffArgument::running_min: return b.run_min;
            case PayoffArgument::terminal: break;
        }
        return b.X.back();
    }

    [[nodiscard]] double operator()(const PathBundle& b) const noexcept { return value(argument_of(b)); }

    /// d argument / dx0: flow at T, or flow at the first argmax / argmin.
    [[nodiscard]] double argument_flow(const PathBundle& b) const noexcept {
        switch (argument()) {
            case PayoffArgument::running_max: return b.flow[b.argmax_index];
            case PayoffArgument::running_min: return b.flow[b.argmin_index];
            case PayoffArgument::terminal: break;
        }
        return b.flow.back();
    }
};

[[nodiscard]] inline std::string_view to_string(PayoffKind k) {
    switch (k) {
        case PayoffKind::european_call: return "call";
        case PayoffKind::digital: return "digital";
        case PayoffKind::up_and_out_call: return "up_and_out";
        case PayoffKind::down_and_out_call: return "down_and_out";
        case PayoffKind::smoothed_call: return "smoothed_call";
        case PayoffKind::identity: return "identity";
        case PayoffKind::constant: return "constant";
    }
    return "unknown";
}

inline PayoffKind payoff_kind_from_string(std::string_view s) {
    for (auto k : {PayoffKind::european_call, PayoffKind::digital, PayoffKind::up_and_out_call,
                   PayoffKind::down_and_out_call, PayoffKind::smoothed_call, PayoffKind::identity,
                   PayoffKind::constant}) {
        if (to_string(k) == s) return k;
    }
    throw EstimatorError("unknown payoff kind '" + std::string(s) + "'");
}

}  // namespace mfj
