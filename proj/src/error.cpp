#include "reflexbridge/error.hpp"

namespace reflexbridge {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::Redefinition: return "Redefinition";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::UndeclaredLocal: return "UndeclaredLocal";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TagMismatch: return "TagMismatch";
    case ErrorCode::EvalError: return "EvalError";
    case ErrorCode::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::NoViableOverload: return "NoViableOverload";
    case ErrorCode::AmbiguousOverload: return "AmbiguousOverload";
    case ErrorCode::DeductionFailure: return "DeductionFailure";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::SubstitutionFailure: return "SubstitutionFailure";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::LoweringError: return "LoweringError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::UnknownCase: return "UnknownCase";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

bool is_internal(ErrorCode code) {
  return code == ErrorCode::LoweringError || code == ErrorCode::ChecksumMismatch;
}

namespace {
std::string decorate(const std::string& message, const std::optional<SourceSpan>& span) {
  if (!span) return message;
  return std::to_string(span->line) + ":" + std::to_string(span->column) + ": " + message;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<SourceSpan> span,
             std::optional<ErrorCode> cause)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + decorate(message, span)),
      code_(code),
      message_(message),
      span_(span),
      cause_(cause) {}

}  // namespace reflexbridge
