#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hlqr {

// Error taxonomy mapped to CLI exit codes: config 2, numerical 3, excitation 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Policy/value iteration ran out of iterations; carries the trailing update norms.
struct ConvergenceError : NumericalError {
  ConvergenceError(const std::string& what, std::vector<double> history)
      : NumericalError(what), update_history(std::move(history)) {}
  std::vector<double> update_history;
};

struct ExcitationError : std::runtime_error {
  explicit ExcitationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hlqr
