#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msface {

enum class ErrorCode {
  MalformedCode,
  OutOfRange,
  DuplicateKey,
  IoFailure,
  EmptySplit,
  InvalidSplit,
  UnsupportedFormat,
  RaggedRows,
  NonNumericCell,
  BadFraction,
  TooSmall,
  ShapeMismatch,
  EmptyTraining,
  BadDimension,
  DimensionMismatch,
  BadExponent,
  LengthMismatch,
  Empty,
  LabelMismatch,
  WeightCountMismatch,
  BadConfig,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure in the library surfaces as an Error carrying a code; the C API
// translates the code into a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace msface
