// lexer.hpp - tokenizer for declaration and kernel sources.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "reflexbridge/error.hpp"

namespace reflexbridge {

enum class TokenKind : std::uint8_t { Ident, Int, Float, Punct, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;    // identifier, punctuation, or number digits (without suffix)
  std::string suffix;  // numeric literal suffix as written: "", "L", "f", "i64", ...
  SourceSpan span;

  bool is(std::string_view punct) const { return kind == TokenKind::Punct && text == punct; }
  bool is_ident(std::string_view word) const { return kind == TokenKind::Ident && text == word; }
};

/// Splits `source` into tokens. `>>` is always two `>` tokens (no shift
/// operators exist in either grammar). The final token is End, positioned on
/// the last character of the input. Throws SyntaxError.
std::vector<Token> tokenize(std::string_view source);

}  // namespace reflexbridge
