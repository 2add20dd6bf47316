#include "koopid/error.hpp"

namespace koopid {

ErrorCategory error_category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidDimension:
    case ErrorCode::kInvalidRange:
    case ErrorCode::kUnknownSystem:
    case ErrorCode::kBadParamCount:
      return ErrorCategory::kConfig;
    case ErrorCode::kNonPrincipalBranch:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kRankDeficientGradient:
    case ErrorCode::kInvariantViolation:
    case ErrorCode::kNonFiniteState:
    case ErrorCode::kNotSquare:
    case ErrorCode::kNonFiniteInput:
      return ErrorCategory::kNumerical;
    default:
      return ErrorCategory::kData;
  }
}

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidDimension: return "InvalidDimension";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kTableExhausted: return "TableExhausted";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kMonotonicityError: return "MonotonicityError";
    case ErrorCode::kEmptySignal: return "EmptySignal";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kInfeasibleSplit: return "InfeasibleSplit";
    case ErrorCode::kMixedSamplingPeriod: return "MixedSamplingPeriod";
    case ErrorCode::kEmptySnapshotSet: return "EmptySnapshotSet";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateBounds: return "DegenerateBounds";
    case ErrorCode::kInconsistentStateCounts: return "InconsistentStateCounts";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kNotSquare: return "NotSquare";
    case ErrorCode::kNonPrincipalBranch: return "NonPrincipalBranch";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kRankDeficientGradient: return "RankDeficientGradient";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kUnknownSystem: return "UnknownSystem";
    case ErrorCode::kBadParamCount: return "BadParamCount";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace koopid
