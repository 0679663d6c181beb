#pragma once

#include <stdexcept>
#include <string>

namespace dynperc {

// Mirrors dp_status in dynperc.h; keep the numeric values in sync.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kLoopEdge = 2,
  kDuplicateEdge = 3,
  kDisconnected = 4,
  kOutOfRange = 5,
  kTooLarge = 6,
  kNotIrreducible = 7,
  kNotReversible = 8,
  kSingularSystem = 9,
  kEmptySet = 10,
  kFullSet = 11,
  kSameState = 12,
  kZeroMass = 13,
  kBadSubset = 14,
  kProfileUnavailable = 15,
  kDegenerateP = 16,
  kNotTransitive = 17,
  kPreconditionFailed = 18,
  kConfigError = 19,
  kIoError = 20,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dynperc
