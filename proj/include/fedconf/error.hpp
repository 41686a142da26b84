#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedconf {

enum class ErrorKind {
  MissingLabels,
  InvalidRow,
  InvalidAlpha,
  EmptyCalibration,
  TooFewRows,
  FederationEmpty,
  ClassCountMismatch,
  InvalidSpec,
  InvalidPlan,
  LengthMismatch,
  EmptyInput,
  ParseError,
  SimplexViolation,
  LabelOutOfRange,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the toolkit. The kind lets callers (the CLI in
/// particular) map errors onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fedconf
