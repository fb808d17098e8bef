#pragma once

#include <stdexcept>
#include <string>

namespace lpg {

/// Invalid user-facing configuration (bad kernel parameters, malformed
/// config file, quadrature weights that do not sum to one, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument to an operation (shape mismatch, out-of-domain point,
/// empty input, rho outside (0,1], ...).
struct ArgumentError : std::invalid_argument {
  explicit ArgumentError(const std::string& msg)
      : std::invalid_argument(msg) {}
};

/// Numerical failure: degenerate spectrum, rank deficiency, optimizer
/// non-convergence.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lpg
