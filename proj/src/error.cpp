#include "fedppi/error.hpp"

namespace fedppi {

std::string_view category_name(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kValidation: return "validation";
    case ErrorCategory::kDomain: return "domain";
    case ErrorCategory::kSingularDesign: return "singular-design";
    case ErrorCategory::kUnsupportedDimension: return "unsupported-dimension";
    case ErrorCategory::kProtocol: return "protocol";
    case ErrorCategory::kDecode: return "decode";
    case ErrorCategory::kTimeout: return "timeout";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace fedppi
