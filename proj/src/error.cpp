#include "fedconf/error.hpp"

namespace fedconf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::InvalidRow: return "InvalidRow";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::EmptyCalibration: return "EmptyCalibration";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::FederationEmpty: return "FederationEmpty";
    case ErrorKind::ClassCountMismatch: return "ClassCountMismatch";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidPlan: return "InvalidPlan";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SimplexViolation: return "SimplexViolation";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fedconf
