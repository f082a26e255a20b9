#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radforce {

enum class ErrorCode {
  Domain,
  Validation,
  IndexOutOfRange,
  IncommensurableFrequencies,
  SingularHarmonicMatrix,
  TruncationNotConverged,
  StepSizeUnderflow,
  PeriodMismatch,
  DegenerateRegime,
  UnsupportedTransition,
  ConfigurationMismatch,
  SingularContinuedFraction,
  DepthNotConverged,
  Parse,
};

/// Stable machine-readable name, used in CLI failure markers.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace radforce
