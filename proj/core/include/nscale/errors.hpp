#pragma once

#include <stdexcept>
#include <string>

namespace nscale {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad arguments to a library call: dimension mismatch, out-of-range index,
// invalid parameter value.
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Evaluation requested outside the tabulated box (beyond the one-node margin).
class ExtrapolationError : public InputError {
 public:
  using InputError::InputError;
};

// Quadrature grid too coarse to resolve the finest oscillation period.
class ResolutionError : public InputError {
 public:
  using InputError::InputError;
};

// Iterative solver failed to reach its tolerance within the iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

// A coefficient field that must be symmetric positive definite is not.
class EllipticityError : public Error {
 public:
  using Error::Error;
};

// A required lower hierarchy level has not been solved yet.
class DependencyError : public Error {
 public:
  using Error::Error;
};

// Numerical self-consistency check failed (e.g. asymmetry residual too large).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Matrix expected to be positive semi-definite has an eigenvalue below -tol,
// or PSD repairs exceeded their budget.
class PsdError : public Error {
 public:
  using Error::Error;
};

// A simulated path escaped the safety box.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, long step) : Error(what), step(step) {}
  long step;
};

// A proven bound was violated beyond tolerance.
class BoundViolationError : public Error {
 public:
  using Error::Error;
};

// CLI exit codes. 0 success, 2 config error, 3 numerical-convergence error,
// 4 bound/invariant violation.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const BoundViolationError*>(&e)) return 4;
  if (dynamic_cast<const EllipticityError*>(&e)) return 4;
  if (dynamic_cast<const ConsistencyError*>(&e)) return 4;
  if (dynamic_cast<const PsdError*>(&e)) return 4;
  return 3;
}

}  // namespace nscale
