// error.hpp - error codes and the exception type shared by every module.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace reflexbridge {

/// Position of a token or node in source text. Line and column are 1-based.
struct SourceSpan {
  std::uint32_t line = 1;
  std::uint32_t column = 1;
  std::uint32_t length = 0;

  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class ErrorCode {
  // parsing
  SyntaxError,
  Redefinition,
  UnsupportedConstruct,
  UndeclaredLocal,
  // lookup / reflection
  NotFound,
  KindMismatch,
  IndexOutOfRange,
  // values
  TagMismatch,
  EvalError,
  IndexOutOfBounds,
  // typing
  NoViableOverload,
  AmbiguousOverload,
  DeductionFailure,
  ArityMismatch,
  SubstitutionFailure,
  TypeError,
  // internal
  LoweringError,
  ChecksumMismatch,
  UnknownCase,
  BadRequest,
};

std::string_view error_code_name(ErrorCode code);

/// True for codes that indicate a broken internal invariant rather than bad input.
bool is_internal(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<SourceSpan> span = std::nullopt,
        std::optional<ErrorCode> cause = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::optional<SourceSpan>& span() const noexcept { return span_; }
  /// The message without code or position prefix.
  const std::string& message() const noexcept { return message_; }

  // For aggregated errors (TypeError), the code of the first underlying failure.
  ErrorCode root_code() const noexcept { return cause_.value_or(code_); }

 private:
  ErrorCode code_;
  std::string message_;
  std::optional<SourceSpan> span_;
  std::optional<ErrorCode> cause_;
};

}  // namespace reflexbridge
