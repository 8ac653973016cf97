#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shocklab {

enum class ErrorKind {
  InvalidInput,
  OutOfRange,
  NoConvergence,
  Nonphysical,
  Quadrature,
  Precision,
  BlowUp,
  Instability,
  MultivaluedRegion,
  NoBranch,
  InvalidProbe,
  Config,
};

std::string_view to_string(ErrorKind kind);

// Process exit code for a failure of the given kind: 2 config, 3 numeric or
// precondition, 4 non-convergence.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, double last_residual)
      : Error(ErrorKind::NoConvergence, what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// Raised by the flow integrator; carries the hierarchy time at which the
// trajectory left the admissible region.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time) : Error(ErrorKind::BlowUp, what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace shocklab
