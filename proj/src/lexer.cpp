#include "reflexbridge/lexer.hpp"

#include <array>
#include <cctype>

namespace reflexbridge {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

constexpr std::array<std::string_view, 8> kMultiPunct = {"...", "::", "..", "->", "+=", "-=", "*=", "/="};
constexpr std::string_view kSinglePunct = "(){}[]<>,;:.=+-*/";

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      out.push_back(next());
    }
    Token end;
    end.kind = TokenKind::End;
    end.span = end_span();
    out.push_back(end);
    return out;
  }

 private:
  SourceSpan here(std::uint32_t length) const { return {line_, col_, length}; }

  // Position of the last character, or 1:1 for empty input.
  SourceSpan end_span() const {
    if (src_.empty()) return {1, 1, 0};
    std::uint32_t line = 1, col = 1, last_line = 1, last_col = 1;
    for (char c : src_) {
      last_line = line;
      last_col = col;
      if (c == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {last_line, last_col, 0};
  }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  char peek(std::size_t off = 0) const { return pos_ + off < src_.size() ? src_[pos_ + off] : '\0'; }

  void skip_trivia() {
    for (;;) {
      if (pos_ >= src_.size()) return;
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        const SourceSpan start = here(2);
        advance(2);
        while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance();
        if (pos_ >= src_.size()) throw Error(ErrorCode::SyntaxError, "unterminated comment", start);
        advance(2);
      } else {
        return;
      }
    }
  }

  Token next() {
    const char c = peek();
    Token t;
    t.span = here(0);
    const std::size_t start = pos_;
    if (ident_start(c)) {
      while (ident_char(peek())) advance();
      t.kind = TokenKind::Ident;
      t.text = std::string(src_.substr(start, pos_ - start));
    } else if (digit(c)) {
      lex_number(t);
    } else {
      for (auto p : kMultiPunct) {
        if (src_.substr(pos_, p.size()) == p) {
          t.kind = TokenKind::Punct;
          t.text = std::string(p);
          advance(p.size());
          t.span.length = static_cast<std::uint32_t>(p.size());
          return t;
        }
      }
      if (kSinglePunct.find(c) == std::string_view::npos) {
        throw Error(ErrorCode::SyntaxError, std::string("unexpected character '") + c + "'", here(1));
      }
      t.kind = TokenKind::Punct;
      t.text = std::string(1, c);
      advance();
    }
    t.span.length = static_cast<std::uint32_t>(pos_ - start);
    return t;
  }

  void lex_number(Token& t) {
    const std::size_t start = pos_;
    bool is_float = false;
    while (digit(peek())) advance();
    // `0..n` is a range, not a float.
    if (peek() == '.' && peek(1) != '.') {
      is_float = true;
      advance();
      while (digit(peek())) advance();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
      is_float = true;
      advance(2);
      while (digit(peek())) advance();
    }
    t.text = std::string(src_.substr(start, pos_ - start));
    const std::size_t suffix_start = pos_;
    while (ident_char(peek())) advance();
    t.suffix = std::string(src_.substr(suffix_start, pos_ - suffix_start));
    if (t.suffix == "f32" || t.suffix == "f64" || t.suffix == "f" || t.suffix == "F") is_float = true;
    t.kind = is_float ? TokenKind::Float : TokenKind::Int;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1;
  std::uint32_t col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace reflexbridge
