#include "common/error.hpp"

namespace s2d {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::ContractViolation: return "contract-violation";
    case ErrorCode::GridRejected: return "grid-rejected";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace s2d
