#include "dynperc/error.hpp"

namespace dynperc {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kLoopEdge: return "LoopEdge";
    case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kNotIrreducible: return "NotIrreducible";
    case ErrorCode::kNotReversible: return "NotReversible";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kFullSet: return "FullSet";
    case ErrorCode::kSameState: return "SameState";
    case ErrorCode::kZeroMass: return "ZeroMass";
    case ErrorCode::kBadSubset: return "BadSubset";
    case ErrorCode::kProfileUnavailable: return "ProfileUnavailable";
    case ErrorCode::kDegenerateP: return "DegenerateP";
    case ErrorCode::kNotTransitive: return "NotTransitive";
    case ErrorCode::kPreconditionFailed: return "PreconditionFailed";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace dynperc
