#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fixrocket {

// Numeric values are part of the C ABI (see fixrocket.h); append only.
enum class ErrorCode : int {
  kFormat = 1,
  kSequencing = 2,
  kSchema = 3,
  kIncompatible = 4,
  kIntegrity = 5,
  kDomain = 6,
  kInsufficientData = 7,
  kDegenerate = 8,
  kDesign = 9,
  kData = 10,
  kShape = 11,
  kSplit = 12,
  kFold = 13,
  kAggregation = 14,
  kSpec = 15,
  kIo = 16,
  kInvalidArgument = 17,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + " error: " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fixrocket
