#pragma once

#include <stdexcept>
#include <string>

namespace magspec {

// Bad inputs: malformed configs, invalid dimensions, unknown keys. CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A physical precondition does not hold (flux not quantized, gap closed,
// perturbation too large for the series to converge). CLI exit code 3.
class PreconditionError : public std::runtime_error {
 public:
  PreconditionError(std::string reason, const std::string& message)
      : std::runtime_error(message), reason_(std::move(reason)) {}

  // Short machine-readable tag, e.g. "flux_not_quantized".
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

// Numerical failure: non-convergence, residual above tolerance. CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void log_warning(const std::string& message);

}  // namespace magspec
