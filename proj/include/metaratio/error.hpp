#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace metaratio {

enum class ErrorCode {
  NonPositiveMean,
  ArmTooSmall,
  NegativeSD,
  NonFiniteValue,
  ZeroVariance,
  NonPositiveMoment,
  DomainError,
  TooFewStudies,
  DegenerateWeights,
  NoBracket,
  NonConvergence,
  DimensionMismatch,
  ToleranceNotMet,
  ConfigError,
  IoError,
  ParseError,
  SchemaError,
  NonRectangularGrid,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the simulation engine in particular) can decide per code whether
/// a failure is fatal, counted, or excluded.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace metaratio
