#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rdx {

enum class ErrorKind {
  InvalidArgument,
  IndexError,
  DimensionMismatch,
  SingularBlock,
  NotPositiveDefinite,
  IllConditioned,
  InfeasibleDistortion,
  DegenerateObservation,
  RegimeViolation,
  StructureViolation,
  NumericalFailure,
  ParseError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::InfeasibleDistortion: return "InfeasibleDistortion";
    case ErrorKind::DegenerateObservation: return "DegenerateObservation";
    case ErrorKind::RegimeViolation: return "RegimeViolation";
    case ErrorKind::StructureViolation: return "StructureViolation";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Error raised by every rdx operation. `values` carries numeric diagnostics
/// (e.g. the offending minimum eigenvalue) for callers that report them.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::map<std::string, double> values = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        values_(std::move(values)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::map<std::string, double>& values() const noexcept { return values_; }

 private:
  ErrorKind kind_;
  std::map<std::string, double> values_;
};

}  // namespace rdx
