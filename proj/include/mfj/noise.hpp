// SPDX-License-Identifier: MIT
#pragma once

#include "mfj/model.hpp"
#include "mfj/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace mfj {

/// One Poisson event. Events inside [t_k, t_{k+1}) are applied at t_k.
struct JumpEvent {
    double time = 0.0;
    double mark = 0.0;
    std::size_t step = 0;
};

/// The full random input of one path on one grid.
struct Noise {
    std::vector<double> dW;          // Brownian increment per step
    std::vector<JumpEvent> jumps;    // sorted by step

    [[nodiscard]] std::size_t steps() const noexcept { return dW.size(); }
};

/// Per step k: N_k ~ Poisson(nu dt), then N_k i.i.d. marks.
inline std::vector<JumpEvent> sample_jumps(const ModelSpec& spec, const TimeGrid& grid, const RngConfig& rng) {
    std::vector<JumpEvent> events;
    if (spec.nu <= 0.0) return events;
    CounterRng counts(rng, StreamTag::poisson_count);
    CounterRng marks(rng, StreamTag::marks);
    const double mean = spec.nu * grid.dt();
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const unsigned n = counts.poisson(mean);
        for (unsigned j = 0; j < n; ++j) {
            events.push_back({grid.time(k), spec.marks.sample(marks.uniform()), k});
        }
    }
    return events;
}

inline std::vector<double> sample_brownian(const TimeGrid& grid, const RngConfig& rng) {
    CounterRng gen(rng, StreamTag::brownian);
    std::vector<double> dW(grid.steps);
    const double sd = std::sqrt(grid.dt());
    for (double& w : dW) w = sd * gen.normal();
    return dW;
}

inline Noise sample_noise(const ModelSpec& spec, const TimeGrid& grid, const RngConfig& rng) {
    return Noise{sample_brownian(grid, rng), sample_jumps(spec, grid, rng)};
}

/// Aggregates fine noise onto a grid `factor` times coarser: Brownian
/// increments are summed, events keep their marks and move to the left
/// endpoint of the coarse step that contains them.
inline Noise coarsen(const Noise& fine, const TimeGrid& coarse_grid, std::size_t factor) {
    if (factor == 0 || fine.steps() != coarse_grid.steps * factor) {
        throw ModelError("coarsening factor does not match the grids");
    }
    Noise out;
    out.dW.assign(coarse_grid.steps, 0.0);
    for (std::size_t k = 0; k < fine.steps(); ++k) out.dW[k / factor] += fine.dW[k];
    out.jumps.reserve(fine.jumps.size());
    for (const auto& e : fine.jumps) {
        const std::size_t step = e.step / factor;
        out.jumps.push_back({coarse_grid.time(step), e.mark, step});
    }
    return out;
}

/// Copy of the noise with event `index` deleted.
inline Noise without_event(const Noise& noise, std::size_t index) {
    Noise out{noise.dW, {}};
    out.jumps.reserve(noise.jumps.size());
    for (std::size_t j = 0; j < noise.jumps.size(); ++j) {
        if (j != index) out.jumps.push_back(noise.jumps[j]);
    }
    return out;
}

/// Copy of the noise with one extra event at step k.
inline Noise with_event(const Noise& noise, const TimeGrid& grid, std::size_t step, double mark) {
    Noise out = noise;
    const auto pos = std::upper_bound(out.jumps.begin(), out.jumps.end(), step,
                                      [](std::size_t s, const JumpEvent& e) { return s < e.step; });
    out.jumps.insert(pos, JumpEvent{grid.time(step), mark, step});
    return out;
}

}  // namespace mfj
