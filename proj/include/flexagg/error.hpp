#pragma once

#include <stdexcept>
#include <string>

namespace flexagg {

enum class ErrorCode {
  NonConvergence,
  SingularAdmittance,
  InconsistentLayout,
  DimensionMismatch,
  BadArity,
  InfeasibleParams,
  ConicPresent,
  Infeasible,
  BigMTooSmall,
  MaxRounds,
  TooManyBinaries,
  NumericalFailure,
  ConfigError,
  ParseError,
};

const char* to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code lets
/// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flexagg
