#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedppi {

// Categories double as CLI exit codes.
enum class ErrorCategory : int {
  kValidation = 2,
  kDomain = 3,
  kSingularDesign = 4,
  kUnsupportedDimension = 5,
  kProtocol = 6,
  kDecode = 7,
  kTimeout = 8,
  kIo = 9,
};

std::string_view category_name(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

enum class DecodeFailure {
  kTruncatedFrame,
  kUnknownVersion,
  kChecksumMismatch,
  kMalformed,
};

class DecodeError : public Error {
 public:
  DecodeError(DecodeFailure failure, const std::string& message)
      : Error(ErrorCategory::kDecode, message), failure_(failure) {}

  DecodeFailure failure() const noexcept { return failure_; }

 private:
  DecodeFailure failure_;
};

[[noreturn]] void fail(ErrorCategory category, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCategory::kValidation, message);
}

}  // namespace fedppi
