#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace queuelab {

// Tolerance used when validating stochastic objects (row sums, distributions,
// intensity-matrix row sums). Inputs violating it are rejected, never patched.
inline constexpr double kStochasticTol = 1e-12;

// Stability verdict for a queue/chain that fails the ergodicity condition.
enum class StabilityVerdict { kTransient, kNullRecurrent };

inline const char* to_string(StabilityVerdict v) {
  return v == StabilityVerdict::kTransient ? "transient" : "null-recurrent";
}

// Input failed structural validation (bad row sum, negative rate, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::string what) : std::runtime_error(std::move(what)) {}
};

// Model parameters describe a system with no stationary regime. Carries the
// three-way classification so callers can render it instead of a bare string.
class UnstableError : public std::runtime_error {
 public:
  UnstableError(std::string what, double rho, StabilityVerdict verdict)
      : std::runtime_error(std::move(what)), rho_(rho), verdict_(verdict) {}

  double rho() const { return rho_; }
  StabilityVerdict verdict() const { return verdict_; }

 private:
  double rho_;
  StabilityVerdict verdict_;
};

// Requested operation is outside the domain of the formula (e.g. nonpositive
// denominator in an approximation, divergent normalization).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(std::string what) : std::runtime_error(std::move(what)) {}
};

}  // namespace queuelab
