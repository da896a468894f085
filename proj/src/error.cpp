#include "flexagg/error.hpp"

namespace flexagg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularAdmittance: return "SingularAdmittance";
    case ErrorCode::InconsistentLayout: return "InconsistentLayout";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadArity: return "BadArity";
    case ErrorCode::InfeasibleParams: return "InfeasibleParams";
    case ErrorCode::ConicPresent: return "ConicPresent";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::BigMTooSmall: return "BigMTooSmall";
    case ErrorCode::MaxRounds: return "MaxRounds";
    case ErrorCode::TooManyBinaries: return "TooManyBinaries";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace flexagg
