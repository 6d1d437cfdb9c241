#include "tide/error.hpp"

namespace tide {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroNormVector: return "ZeroNormVector";
    case ErrorCode::kEmptyRun: return "EmptyRun";
    case ErrorCode::kNoActions: return "NoActions";
    case ErrorCode::kMissingAnnotation: return "MissingAnnotation";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kMismatchedHorizons: return "MismatchedHorizons";
    case ErrorCode::kNoCommonTasks: return "NoCommonTasks";
    case ErrorCode::kStrictAlignmentViolation: return "StrictAlignmentViolation";
    case ErrorCode::kDuplicateRun: return "DuplicateRun";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, std::size_t line) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  out += error_code_name(code);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(compose(code, message, line)),
      code_(code),
      line_(line),
      reason_(message) {}

}  // namespace tide
