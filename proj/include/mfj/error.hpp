// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model specification or mean-function failure.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Failure while stepping a path: divergence, loss of positivity, singular Y.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, std::size_t step)
        : Error(what + " at step " + std::to_string(step)), step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Weight construction is not possible (e.g. jump-free model).
class WeightError : public Error {
public:
    using Error::Error;
};

/// Estimator contract violation (too few paths, unsupported payoff, ...).
class EstimatorError : public Error {
public:
    using Error::Error;
};

/// Run configuration problem. Maps to exit code 2 in the CLI.
class ConfigError : public Error {
public:
    using Error::Error;

    static ConfigError at_line(std::size_t line, const std::string& what) {
        return ConfigError("line " + std::to_string(line) + ": " + what);
    }
};

}  // namespace mfj
