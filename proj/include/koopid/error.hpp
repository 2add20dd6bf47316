#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace koopid {

/// Failure categories raised by the library. The C API and the CLI map
/// these onto status and exit codes (see `error_category`).
enum class ErrorCode {
  kInvalidArgument,
  kInvalidDimension,
  kDimensionMismatch,
  kIndexOutOfRange,
  kInvalidRange,
  kTableExhausted,
  kIoError,
  kParseError,
  kSchemaError,
  kMonotonicityError,
  kEmptySignal,
  kTooFewSamples,
  kInfeasibleSplit,
  kMixedSamplingPeriod,
  kEmptySnapshotSet,
  kEmptyInput,
  kLengthMismatch,
  kDegenerateBounds,
  kInconsistentStateCounts,
  kNonFiniteInput,
  kNotSquare,
  kNonPrincipalBranch,
  kInsufficientData,
  kRankDeficientGradient,
  kInvariantViolation,
  kUnknownSystem,
  kBadParamCount,
  kNonFiniteState,
  kConfigError,
};

/// Coarse grouping used for process exit codes.
enum class ErrorCategory { kConfig = 2, kData = 3, kNumerical = 4 };

ErrorCategory error_category(ErrorCode code) noexcept;
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a matrix has eigenvalues on the closed negative real axis (or
/// zero), so no real principal logarithm exists. Carries the spectrum.
class SpectrumError : public Error {
 public:
  SpectrumError(ErrorCode code, const std::string& message,
                std::vector<std::complex<double>> offending,
                std::vector<std::complex<double>> spectrum)
      : Error(code, message),
        offending_(std::move(offending)),
        spectrum_(std::move(spectrum)) {}

  const std::vector<std::complex<double>>& offending() const noexcept { return offending_; }
  const std::vector<std::complex<double>>& spectrum() const noexcept { return spectrum_; }

 private:
  std::vector<std::complex<double>> offending_;
  std::vector<std::complex<double>> spectrum_;
};

/// Integration blew up; `time` is the first simulated time at which a state
/// left the finite range.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, double time)
      : Error(ErrorCode::kNonFiniteState, message), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace koopid
