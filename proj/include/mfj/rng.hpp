// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace mfj {

/// Independent random streams drawn for one path.
enum class StreamTag : std::uint64_t { brownian = 1, poisson_count = 2, marks = 3 };

/// Identifies the random stream of a single path. The stream depends only on
/// these two numbers, never on thread count or evaluation order.
struct RngConfig {
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: output n is mix64(key + n * golden). The key is a
/// hash of (seed, path, tag), so each (path, tag) pair owns a disjoint stream.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(const RngConfig& cfg, StreamTag tag) noexcept
        : key_(detail::mix64(detail::mix64(detail::mix64(cfg.master_seed) ^ cfg.path_index) +
                             static_cast<std::uint64_t>(tag) * 0xD1B54A32D192ED03ULL)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        ++counter_;
        return detail::mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Poisson draw by inversion. Large means are split into chunks so the
    /// starting probability exp(-mean) never underflows.
    unsigned poisson(double mean) noexcept {
        if (mean <= 0.0) return 0;
        unsigned total = 0;
        while (mean > 30.0) {
            total += poisson_small(30.0);
            mean -= 30.0;
        }
        return total + poisson_small(mean);
    }

private:
    unsigned poisson_small(double mean) noexcept {
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        unsigned k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mfj
