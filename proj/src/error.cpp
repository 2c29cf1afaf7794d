#include "vesicle/error.hpp"

namespace vesicle {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidBandLimit: return "invalid-band-limit";
    case ErrorKind::ShapeError: return "shape-error";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::ShapeOutOfTubularNeighborhood: return "shape-out-of-tubular-neighborhood";
    case ErrorKind::StepTooLarge: return "step-too-large";
    case ErrorKind::CompatibilityError: return "compatibility-error";
    case ErrorKind::SolverDegenerate: return "solver-degenerate";
    case ErrorKind::NotInTangentSpace: return "not-in-tangent-space";
    case ErrorKind::DegenerateConstraints: return "degenerate-constraints";
    case ErrorKind::BlowUpDetected: return "blow-up-detected";
    case ErrorKind::ParseError: return "parse-error";
  }
  return "unknown";
}

}  // namespace vesicle
