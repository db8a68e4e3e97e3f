// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace mfj {

/// Count, mean and sum of squared deviations (Welford).
struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) noexcept {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    /// Unbiased sample variance; zero below two samples.
    [[nodiscard]] double variance() const noexcept { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    [[nodiscard]] double stderr_of_mean() const noexcept {
        return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

/// Chan et al. pairwise combination.
[[nodiscard]] inline Moments merge(const Moments& a, const Moments& b) noexcept {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    Moments r;
    r.n = a.n + b.n;
    const double na = static_cast<double>(a.n);
    const double nb = static_cast<double>(b.n);
    const double d = b.mean - a.mean;
    r.mean = a.mean + d * nb / static_cast<double>(r.n);
    r.m2 = a.m2 + b.m2 + d * d * na * nb / static_cast<double>(r.n);
    return r;
}

inline constexpr std::size_t kReductionLeaf = 64;

/// Moments of `xs` by a fixed pairwise tree over index ranges. The result
/// depends only on the values and their order.
[[nodiscard]] inline Moments tree_moments(std::span<const double> xs) {
    if (xs.size() <= kReductionLeaf) {
        Moments m;
        for (double x : xs) m.add(x);
        return m;
    }
    const std::size_t half = xs.size() / 2;
    return merge(tree_moments(xs.first(half)), tree_moments(xs.subspan(half)));
}

}  // namespace mfj
