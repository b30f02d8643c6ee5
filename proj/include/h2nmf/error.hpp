#pragma once

#include <stdexcept>
#include <string>

namespace h2nmf {

// Error classes surfaced by the library. Values are stable: the C API
// returns them as status codes and the CLI maps them to exit codes.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDomain = 2,
  kUnsplittable = 3,
  kDegenerateFactors = 4,
  kIo = 5,
  kBadMagic = 6,
  kTruncatedPayload = 7,
  kSizeMismatch = 8,
  kParse = 9,
  kNoGeometry = 10,
  kStaleRevision = 11,
  kNotFound = 12,
};

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

}  // namespace h2nmf
