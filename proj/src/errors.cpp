#include "radforce/errors.hpp"

namespace radforce {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Domain: return "Domain";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::IncommensurableFrequencies: return "IncommensurableFrequencies";
    case ErrorCode::SingularHarmonicMatrix: return "NonUnique";
    case ErrorCode::TruncationNotConverged: return "TruncationNotConverged";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::PeriodMismatch: return "PeriodMismatch";
    case ErrorCode::DegenerateRegime: return "DegenerateRegime";
    case ErrorCode::UnsupportedTransition: return "UnsupportedTransition";
    case ErrorCode::ConfigurationMismatch: return "ConfigurationMismatch";
    case ErrorCode::SingularContinuedFraction: return "SingularContinuedFraction";
    case ErrorCode::DepthNotConverged: return "DepthNotConverged";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace radforce
