#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tide {

enum class ErrorCode {
  kMalformedRecord,
  kSchemaViolation,
  kInvariantViolation,
  kDimensionMismatch,
  kZeroNormVector,
  kEmptyRun,
  kNoActions,
  kMissingAnnotation,
  kEmptyScores,
  kMismatchedHorizons,
  kNoCommonTasks,
  kStrictAlignmentViolation,
  kDuplicateRun,
  kInvalidSpec,
  kEmptyInput,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

/// Library-wide exception. `line()` is the 1-based source line for errors
/// raised while reading a log file, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  ErrorCode code_;
  std::size_t line_;
  std::string reason_;
};

}  // namespace tide
