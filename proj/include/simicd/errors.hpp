#pragma once

#include <stdexcept>
#include <string>

namespace simicd {

/// Invalid configuration or input file. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Runtime failure of a well-formed run (induction failure, solver
/// instability, I/O). The CLI maps this to exit code 1.
struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace simicd
