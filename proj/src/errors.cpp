#include "shocklab/errors.hpp"

namespace shocklab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::Nonphysical: return "nonphysical-solution";
    case ErrorKind::Quadrature: return "quadrature-failure";
    case ErrorKind::Precision: return "precision";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::MultivaluedRegion: return "multivalued-region";
    case ErrorKind::NoBranch: return "no-branch";
    case ErrorKind::InvalidProbe: return "invalid-probe";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::NoConvergence: return 4;
    default: return 3;
  }
}

}  // namespace shocklab
