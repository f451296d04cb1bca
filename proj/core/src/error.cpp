#include "heraldsim/error.hpp"

namespace heraldsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::MarginTooSmall: return "MarginTooSmall";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DegenerateModes: return "DegenerateModes";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ExpansionInvalid: return "ExpansionInvalid";
    case ErrorCode::UnsupportedSupport: return "UnsupportedSupport";
    case ErrorCode::SpanDeficit: return "SpanDeficit";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::CutoffExceeded: return "CutoffExceeded";
    case ErrorCode::InvalidDensity: return "InvalidDensity";
    case ErrorCode::ModesNotOrthogonal: return "ModesNotOrthogonal";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::DurationTooShort: return "DurationTooShort";
    case ErrorCode::RateTooHigh: return "RateTooHigh";
    case ErrorCode::InsufficientStatistics: return "InsufficientStatistics";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace heraldsim
