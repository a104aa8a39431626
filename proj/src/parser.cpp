#include "reflexbridge/parser.hpp"

#include <charconv>
#include <cstdlib>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <variant>

#include "reflexbridge/lexer.hpp"
#include "detail.hpp"

namespace reflexbridge {

namespace {

enum class Mode { Decl, Kernel };

// ---------------------------------------------------------------------------
// Syntax-level declarations, produced before anything touches the engine.

struct FnDecl {
  std::string name;
  bool is_template = false;
  std::string tparam;
  Signature sig;
  BodyPtr body;
  SourceSpan span;
};

struct ClassDecl {
  std::string name;
  bool is_template = false;
  ClassPattern pattern;
  SourceSpan span;
};

struct NsDecl;
using Decl = std::variant<FnDecl, ClassDecl, std::shared_ptr<NsDecl>>;

struct NsDecl {
  std::string name;
  std::vector<Decl> decls;
  SourceSpan span;
};

[[noreturn]] void fail(ErrorCode code, const std::string& msg, const SourceSpan& span) {
  throw Error(code, msg, span);
}

bool is_reserved_unsupported(std::string_view w) {
  static const std::set<std::string_view> words = {
      "typedef", "using",   "enum",     "union",  "extern",    "static",   "const",
      "inline",  "virtual", "constexpr", "operator", "friend", "unsigned", "signed",
      "short",   "char",    "volatile", "mutable", "explicit", "typename", "decltype",
      "new",     "delete",  "this",     "if",      "while",    "switch",   "goto"};
  return words.count(w) > 0;
}

Scalar make_number(const Token& t, Mode mode) {
  const std::string& sfx = t.suffix;
  TypeKind kind;
  if (sfx.empty()) {
    kind = t.kind == TokenKind::Float ? TypeKind::F64 : (mode == Mode::Kernel ? TypeKind::I64 : TypeKind::I32);
  } else if (sfx == "i32") {
    kind = TypeKind::I32;
  } else if (sfx == "i64" || sfx == "L" || sfx == "l" || sfx == "LL" || sfx == "ll") {
    kind = TypeKind::I64;
  } else if (sfx == "f32" || sfx == "f" || sfx == "F") {
    kind = TypeKind::F32;
  } else if (sfx == "f64") {
    kind = TypeKind::F64;
  } else {
    fail(ErrorCode::SyntaxError, "invalid literal suffix '" + sfx + "'", t.span);
  }
  if (t.kind == TokenKind::Float || kind == TypeKind::F32 || kind == TypeKind::F64) {
    if (kind != TypeKind::F32 && kind != TypeKind::F64) {
      fail(ErrorCode::SyntaxError, "integer suffix on floating literal", t.span);
    }
    if (kind == TypeKind::F32) return std::strtof(t.text.c_str(), nullptr);
    return std::strtod(t.text.c_str(), nullptr);
  }
  std::uint64_t v = 0;
  auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.text.data() + t.text.size()) {
    fail(ErrorCode::SyntaxError, "integer literal out of range", t.span);
  }
  if (kind == TypeKind::I32) {
    if (v > 2147483647ull) fail(ErrorCode::SyntaxError, "integer literal out of range for i32", t.span);
    return static_cast<std::int32_t>(v);
  }
  if (v > 9223372036854775807ull) fail(ErrorCode::SyntaxError, "integer literal out of range for i64", t.span);
  return static_cast<std::int64_t>(v);
}

// ---------------------------------------------------------------------------

class Parser {
 public:
  Parser(std::string_view src, const Engine* engine, Mode mode)
      : toks_(tokenize(src)), engine_(engine), mode_(mode) {}

  std::vector<Decl> parse_tu() {
    std::vector<Decl> out;
    while (!at_end()) parse_decl(out);
    return out;
  }

  std::vector<KernelAST> parse_kernel_file() {
    std::vector<KernelAST> out;
    while (!at_end()) out.push_back(parse_kernel_def());
    return out;
  }

  TypeRef parse_standalone_type() {
    TypeRef t = parse_type();
    if (!at_end()) fail(ErrorCode::SyntaxError, "trailing tokens after type", peek().span);
    return t;
  }

  Scalar parse_standalone_literal() {
    bool negative = accept("-");
    const Token& t = next();
    Scalar v;
    if (t.is_ident("true") || t.is_ident("false")) {
      if (negative) fail(ErrorCode::SyntaxError, "cannot negate bool", t.span);
      v = t.text == "true";
    } else if (t.kind == TokenKind::Int || t.kind == TokenKind::Float) {
      v = make_number(t, Mode::Kernel);
      if (negative) v = std::visit([](auto x) -> Scalar { return apply_neg(x); }, v);
    } else {
      fail(ErrorCode::SyntaxError, "expected a literal", t.span);
    }
    if (!at_end()) fail(ErrorCode::SyntaxError, "trailing tokens after literal", peek().span);
    return v;
  }

 private:
  // -- token stream ---------------------------------------------------------
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokenKind::End; }
  bool accept(std::string_view p) {
    if (peek().is(p)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_ident(std::string_view w) {
    if (peek().is_ident(w)) {
      next();
      return true;
    }
    return false;
  }
  const Token& expect(std::string_view p) {
    if (!peek().is(p)) {
      fail(ErrorCode::SyntaxError, "expected '" + std::string(p) + "'" + found(), peek().span);
    }
    return next();
  }
  std::string found() const {
    const Token& t = peek();
    if (t.kind == TokenKind::End) return " at end of input";
    return " before '" + t.text + t.suffix + "'";
  }
  const Token& expect_ident(const char* what) {
    if (peek().kind != TokenKind::Ident) {
      fail(ErrorCode::SyntaxError, std::string("expected ") + what + found(), peek().span);
    }
    if (is_reserved_unsupported(peek().text)) {
      fail(ErrorCode::UnsupportedConstruct, "'" + peek().text + "' is not supported", peek().span);
    }
    return next();
  }

  // -- names ----------------------------------------------------------------
  struct NameInfo {
    std::string qualified;
    EntityKind kind;
  };

  std::optional<NameInfo> find_name(const std::string& written) const {
    std::vector<std::string> candidates;
    if (written.find("::") == std::string::npos && !ns_prefix_.empty()) candidates.push_back(ns_prefix_ + written);
    candidates.push_back(written);
    for (const auto& c : candidates) {
      if (auto it = declared_.find(c); it != declared_.end()) return NameInfo{c, it->second};
      if (engine_) {
        if (auto id = engine_->find(c)) return NameInfo{c, engine_->entity(*id).kind};
      }
    }
    return std::nullopt;
  }

  bool is_tparam(const std::string& name) const {
    for (const auto& p : tparams_) {
      if (p == name) return true;
    }
    return false;
  }

  std::string parse_qualified_name() {
    std::string name = expect_ident("identifier").text;
    while (peek().is("::")) {
      next();
      name += "::";
      name += expect_ident("identifier after '::'").text;
    }
    return name;
  }

  // -- types ----------------------------------------------------------------
  std::vector<TypeRef> parse_targs() {
    expect("<");
    std::vector<TypeRef> args;
    if (accept(">")) return args;
    do {
      TypeRef t = parse_type();
      if (peek().is("...")) {
        const Token& dots = next();
        if (t.kind() != TypeKind::TemplateParam || t.name() != pack_param_) {
          fail(ErrorCode::UnsupportedConstruct, "pack expansion of a non-pack type", dots.span);
        }
        t = TypeRef::template_param(t.name(), true);
      } else if (t.kind() == TypeKind::TemplateParam && !pack_param_.empty() && t.name() == pack_param_) {
        fail(ErrorCode::UnsupportedConstruct, "pack parameter used without expansion", peek().span);
      }
      args.push_back(std::move(t));
    } while (accept(","));
    expect(">");
    return args;
  }

  TypeRef parse_type() {
    const Token& t = peek();
    if (t.kind != TokenKind::Ident) fail(ErrorCode::SyntaxError, "expected a type" + found(), t.span);
    if (is_reserved_unsupported(t.text)) {
      fail(ErrorCode::UnsupportedConstruct, "'" + t.text + "' is not supported", t.span);
    }
    TypeRef result;
    if (auto b = builtin_kind(t.text)) {
      next();
      if (t.text == "long" && peek().is_ident("long")) next();
      result = TypeRef::builtin(*b);
    } else if (is_tparam(t.text)) {
      next();
      result = TypeRef::template_param(t.text);
    } else if (t.text == "array2d") {
      if (mode_ != Mode::Kernel) fail(ErrorCode::UnsupportedConstruct, "arrays are kernel-only", t.span);
      next();
      expect("<");
      TypeRef elem = parse_type();
      if (elem.kind() != TypeKind::F64) {
        fail(ErrorCode::UnsupportedConstruct, "only array2d<f64> is supported", t.span);
      }
      expect(">");
      result = TypeRef::array2d(elem);
    } else {
      const SourceSpan span = t.span;
      std::string name = parse_qualified_name();
      if (mode_ == Mode::Kernel && !engine_) {
        if (peek().is("<")) {
          result = TypeRef::instantiation(kNoEntity, name, parse_targs());
        } else {
          result = TypeRef::class_type(kNoEntity, name);
        }
      } else {
        auto info = find_name(name);
        if (!info) fail(ErrorCode::SyntaxError, "unknown type name '" + name + "'", span);
        const EntityId id = engine_ ? engine_->find(info->qualified).value_or(kNoEntity) : kNoEntity;
        if (info->kind == EntityKind::Class) {
          if (peek().is("<")) fail(ErrorCode::SyntaxError, "'" + name + "' is not a template", peek().span);
          result = TypeRef::class_type(id, info->qualified);
        } else if (info->kind == EntityKind::ClassTemplate) {
          if (!peek().is("<")) {
            fail(ErrorCode::UnsupportedConstruct, "template name '" + name + "' used without arguments", span);
          }
          result = TypeRef::instantiation(id, info->qualified, parse_targs());
        } else {
          fail(ErrorCode::SyntaxError, "'" + name + "' does not name a type", span);
        }
      }
    }
    if (peek().is("*") || peek().is("&")) {
      fail(ErrorCode::UnsupportedConstruct, "pointers and references are not supported", peek().span);
    }
    return result;
  }

  // -- expressions ----------------------------------------------------------
  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    while (peek().is("+") || peek().is("-")) {
      const Token& op = next();
      ExprPtr rhs = parse_term();
      lhs = expr::binary(op.text == "+" ? BinOp::Add : BinOp::Sub, lhs, rhs, op.span);
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    while (peek().is("*") || peek().is("/")) {
      const Token& op = next();
      ExprPtr rhs = parse_unary();
      lhs = expr::binary(op.text == "*" ? BinOp::Mul : BinOp::Div, lhs, rhs, op.span);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (peek().is("-")) {
      const Token& op = next();
      return expr::neg(parse_unary(), op.span);
    }
    if (peek().is("+")) {
      next();
      return parse_unary();
    }
    return parse_postfix();
  }

  std::vector<ExprPtr> parse_call_args() {
    expect("(");
    std::vector<ExprPtr> args;
    if (accept(")")) return args;
    do {
      args.push_back(parse_expr());
    } while (accept(","));
    expect(")");
    return args;
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (peek().is(".")) {
      next();
      const Token& name = expect_ident("member name");
      if (peek().is("(")) {
        e = expr::method_call(e, name.text, parse_call_args(), name.span);
      } else if (mode_ == Mode::Kernel && e->kind == ExprKind::Ref && is_kernel_param(e->name) &&
                 (name.text == "rows" || name.text == "cols")) {
        e = expr::dim(e, name.text == "rows" ? 0 : 1, name.span);
      } else {
        e = expr::member(e, name.text, name.span);
      }
    }
    return e;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    if (t.kind == TokenKind::Int || t.kind == TokenKind::Float) {
      next();
      return expr::literal(make_number(t, mode_), t.span);
    }
    if (t.is("(")) {
      next();
      ExprPtr e = parse_expr();
      expect(")");
      return e;
    }
    if (t.kind != TokenKind::Ident) fail(ErrorCode::SyntaxError, "expected an expression" + found(), t.span);
    if (t.text == "true" || t.text == "false") {
      next();
      return expr::literal(t.text == "true", t.span);
    }
    if (is_reserved_unsupported(t.text)) {
      fail(ErrorCode::UnsupportedConstruct, "'" + t.text + "' is not supported", t.span);
    }
    // Functional cast: `f64(x)`, `int(x)`, `T(x)`.
    if ((builtin_kind(t.text) || is_tparam(t.text)) && peek(1).is("(")) {
      next();
      TypeRef to = builtin_kind(t.text) ? TypeRef::builtin(*builtin_kind(t.text)) : TypeRef::template_param(t.text);
      if (to.kind() == TypeKind::Void) fail(ErrorCode::UnsupportedConstruct, "cast to void", t.span);
      auto args = parse_call_args();
      if (args.size() != 1) fail(ErrorCode::SyntaxError, "conversion takes exactly one argument", t.span);
      return expr::cast(to, args[0], t.span);
    }
    const SourceSpan span = t.span;
    std::string name = parse_qualified_name();
    if (peek().is("<")) {
      if (mode_ == Mode::Decl) {
        auto info = find_name(name);
        const bool is_template = info && (info->kind == EntityKind::FunctionTemplate ||
                                          info->kind == EntityKind::OverloadSet);
        if (!is_template) fail(ErrorCode::SyntaxError, "'" + name + "' is not a function template", peek().span);
      }
      auto targs = parse_targs();
      if (!peek().is("(")) fail(ErrorCode::SyntaxError, "expected '(' after template arguments", peek().span);
      return expr::call(name, parse_call_args(), std::move(targs), span);
    }
    if (peek().is("(")) {
      if (mode_ == Mode::Decl) {
        if (auto info = find_name(name); info && info->kind == EntityKind::Class) {
          fail(ErrorCode::UnsupportedConstruct, "constructor calls are not supported", span);
        }
      }
      return expr::call(name, parse_call_args(), std::nullopt, span);
    }
    if (name.find("::") != std::string::npos) {
      fail(ErrorCode::SyntaxError, "qualified name '" + name + "' used as a value", span);
    }
    ExprPtr ref = expr::ref(name, span);
    note_ref(name, span);
    if (peek().is("[")) {
      if (mode_ != Mode::Kernel) fail(ErrorCode::UnsupportedConstruct, "subscripts are kernel-only", peek().span);
      const Token& open = next();
      ExprPtr row = parse_expr();
      expect(",");
      ExprPtr col = parse_expr();
      expect("]");
      return expr::index(ref, row, col, open.span);
    }
    return ref;
  }

  // -- scopes ---------------------------------------------------------------
  bool in_scope(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (it->count(name)) return true;
    }
    return false;
  }

  void declare_local(const std::string& name, const SourceSpan& span) {
    if (in_scope(name)) fail(ErrorCode::SyntaxError, "redeclaration of '" + name + "'", span);
    scopes_.back().insert(name);
  }

  void note_ref(const std::string& name, const SourceSpan& span) {
    if (in_scope(name)) return;
    if (mode_ == Mode::Kernel) fail(ErrorCode::UndeclaredLocal, "use of undeclared local '" + name + "'", span);
    pending_refs_.emplace_back(name, span);
  }

  bool is_kernel_param(const std::string& name) const { return kernel_params_.count(name) > 0; }

  // -- declarations ---------------------------------------------------------
  void parse_decl(std::vector<Decl>& out) {
    if (accept(";")) return;
    const Token& t = peek();
    if (t.is_ident("namespace")) {
      next();
      if (!ns_prefix_.empty()) fail(ErrorCode::UnsupportedConstruct, "nested namespaces are not supported", t.span);
      const Token& name = expect_ident("namespace name");
      auto ns = std::make_shared<NsDecl>();
      ns->name = name.text;
      ns->span = name.span;
      declared_[name.text] = EntityKind::Namespace;
      expect("{");
      ns_prefix_ = name.text + "::";
      while (!peek().is("}")) {
        if (at_end()) fail(ErrorCode::SyntaxError, "unterminated namespace", peek().span);
        parse_decl(ns->decls);
      }
      next();
      ns_prefix_.clear();
      accept(";");
      out.emplace_back(std::move(ns));
      return;
    }
    if (t.is_ident("template")) {
      next();
      parse_template(out);
      return;
    }
    if (t.is_ident("struct") || t.is_ident("class")) {
      out.emplace_back(parse_class({}, {}, t.span));
      return;
    }
    if (t.kind == TokenKind::Ident && (t.text == "public" || t.text == "private" || t.text == "protected")) {
      fail(ErrorCode::SyntaxError, "access specifier outside a class", t.span);
    }
    FnDecl fn = parse_function(false, "");
    out.emplace_back(std::move(fn));
  }

  struct TParam {
    std::string name;
    bool pack = false;
  };

  void parse_template(std::vector<Decl>& out) {
    const SourceSpan start = peek().span;
    expect("<");
    std::vector<TParam> params;
    if (!accept(">")) {
      do {
        const Token& kw = peek();
        if (!kw.is_ident("class") && !kw.is_ident("typename")) {
          if (kw.kind == TokenKind::Ident && builtin_kind(kw.text)) {
            fail(ErrorCode::UnsupportedConstruct, "non-type template parameters are not supported", kw.span);
          }
          fail(ErrorCode::SyntaxError, "expected 'class' or 'typename'" + found(), kw.span);
        }
        next();
        TParam p;
        p.pack = accept("...");
        p.name = expect_ident("template parameter name").text;
        if (peek().is("=")) fail(ErrorCode::UnsupportedConstruct, "default template arguments", peek().span);
        params.push_back(p);
      } while (accept(","));
      expect(">");
    }
    if (peek().is_ident("struct") || peek().is_ident("class")) {
      out.emplace_back(parse_class(params, {true}, start));
      return;
    }
    if (params.size() != 1 || params[0].pack) {
      fail(ErrorCode::UnsupportedConstruct, "function templates take exactly one type parameter", start);
    }
    tparams_ = {params[0].name};
    FnDecl fn = parse_function(true, params[0].name);
    tparams_.clear();
    out.emplace_back(std::move(fn));
  }

  ClassDecl parse_class(const std::vector<TParam>& params, std::optional<bool> is_template, SourceSpan start) {
    const Token& kw = next();
    ClassDecl decl;
    decl.is_template = is_template.has_value();
    decl.pattern.is_struct = kw.text == "struct";
    decl.pattern.span = start;
    const Token& name_tok = expect_ident("class name");
    decl.name = name_tok.text;
    decl.span = name_tok.span;
    const std::string qualified = ns_prefix_ + decl.name;

    tparams_.clear();
    pack_param_.clear();
    for (const auto& p : params) {
      tparams_.push_back(p.name);
      decl.pattern.params.push_back(p.name);
      if (p.pack) pack_param_ = p.name;
    }
    decl.pattern.variadic = !pack_param_.empty();

    if (peek().is("<")) {
      if (!decl.is_template) fail(ErrorCode::SyntaxError, "specialization without 'template<>'", peek().span);
      auto info = find_name(decl.name);
      if (!info || info->kind != EntityKind::ClassTemplate) {
        fail(ErrorCode::SyntaxError, "specialization of unknown template '" + decl.name + "'", name_tok.span);
      }
      decl.pattern.is_specialization = true;
      decl.pattern.spec_args = parse_targs();
      check_specialization_shape(decl, name_tok.span);
    } else if (decl.is_template) {
      if (params.size() != 1) {
        fail(ErrorCode::UnsupportedConstruct, "class templates take exactly one type parameter", start);
      }
    }

    if (accept(";")) {
      // Forward declaration: only the variadic primary of the tuple shape.
      if (!decl.is_template || decl.pattern.is_specialization || pack_param_.empty()) {
        fail(ErrorCode::UnsupportedConstruct, "forward declarations are only supported for variadic templates",
             name_tok.span);
      }
      decl.pattern.defined = false;
      declared_[qualified] = EntityKind::ClassTemplate;
      tparams_.clear();
      pack_param_.clear();
      return decl;
    }
    if (decl.is_template && !decl.pattern.is_specialization && !pack_param_.empty()) {
      fail(ErrorCode::UnsupportedConstruct, "variadic templates must use the recursive specialization pattern",
           name_tok.span);
    }
    if (!decl.pattern.is_specialization) {
      declared_[qualified] = decl.is_template ? EntityKind::ClassTemplate : EntityKind::Class;
    }
    decl.pattern.defined = true;
    expect("{");
    pending_refs_.clear();
    std::set<std::string> member_names;
    while (!peek().is("}")) {
      if (at_end()) fail(ErrorCode::SyntaxError, "unterminated class body", peek().span);
      parse_member(decl, member_names);
    }
    next();
    expect(";");
    for (const auto& [ref, span] : pending_refs_) {
      if (!member_names.count(ref)) fail(ErrorCode::SyntaxError, "use of undeclared identifier '" + ref + "'", span);
    }
    pending_refs_.clear();
    tparams_.clear();
    pack_param_.clear();
    return decl;
  }

  void check_specialization_shape(const ClassDecl& decl, const SourceSpan& span) {
    const auto& p = decl.pattern;
    const bool empty_spec = p.params.empty() && p.spec_args.empty();
    const bool recursive_spec = p.params.size() == 2 && p.variadic && p.params[1] == pack_param_ &&
                                p.spec_args.size() == 2 &&
                                p.spec_args[0] == TypeRef::template_param(p.params[0]) &&
                                p.spec_args[1] == TypeRef::template_param(p.params[1], true);
    if (!empty_spec && !recursive_spec) {
      fail(ErrorCode::UnsupportedConstruct,
           "only `<>` and `<T, Rest...>` specializations of variadic templates are supported", span);
    }
  }

  void parse_member(ClassDecl& decl, std::set<std::string>& names) {
    const Token& t = peek();
    if (t.is_ident("public") || t.is_ident("private") || t.is_ident("protected")) {
      next();
      expect(":");
      return;
    }
    if (t.kind == TokenKind::Ident && t.text == decl.name && peek(1).is("(")) {
      fail(ErrorCode::UnsupportedConstruct, "constructors are not supported", t.span);
    }
    if (t.is_ident("template")) fail(ErrorCode::UnsupportedConstruct, "member templates are not supported", t.span);
    if (t.is_ident("struct") || t.is_ident("class")) {
      fail(ErrorCode::UnsupportedConstruct, "nested classes are not supported", t.span);
    }
    TypeRef type = parse_type();
    const Token& name = expect_ident("member name");
    MemberDecl m;
    m.name = name.text;
    m.span = name.span;
    if (peek().is("(")) {
      m.kind = MemberDecl::Kind::Method;
      check_value_type(type, t.span, "return");
      m.signature.result = type;
      scopes_.assign(1, {});
      m.signature.params = parse_params();
      m.body = parse_body(m.signature.result);
      scopes_.clear();
      accept(";");
      // Methods may be overloaded; a data member may not share a method name.
      for (const auto& other : decl.pattern.members) {
        if (other.name == m.name && other.kind == MemberDecl::Kind::Data) {
          fail(ErrorCode::Redefinition, "redefinition of member '" + m.name + "'", m.span);
        }
      }
    } else {
      m.kind = MemberDecl::Kind::Data;
      if (type.kind() == TypeKind::Void) fail(ErrorCode::SyntaxError, "data member of type void", t.span);
      m.type = type;
      if (accept("=")) {
        if (type.is_record()) {
          fail(ErrorCode::UnsupportedConstruct, "initializers for class-typed members", name.span);
        }
        scopes_.assign(1, {});
        m.init = parse_expr();
        scopes_.clear();
      } else if (accept("{")) {
        expect("}");
      }
      expect(";");
      if (names.count(m.name)) fail(ErrorCode::Redefinition, "redefinition of member '" + m.name + "'", m.span);
    }
    names.insert(m.name);
    decl.pattern.members.push_back(std::move(m));
  }

  void check_value_type(const TypeRef& t, const SourceSpan& span, const char* what) {
    if (t.kind() == TypeKind::Void) {
      fail(ErrorCode::UnsupportedConstruct, std::string("void ") + what + " types are not supported", span);
    }
    if (t.is_record()) {
      fail(ErrorCode::UnsupportedConstruct, std::string("class-typed ") + what + " values are not supported", span);
    }
  }

  std::vector<Param> parse_params() {
    expect("(");
    std::vector<Param> params;
    if (accept(")")) return params;
    if (peek().is_ident("void") && peek(1).is(")")) {
      next();
      next();
      return params;
    }
    do {
      const SourceSpan span = peek().span;
      Param p;
      p.type = parse_type();
      check_value_type(p.type, span, "parameter");
      const Token& name = expect_ident("parameter name");
      p.name = name.text;
      declare_local(p.name, name.span);
      params.push_back(std::move(p));
    } while (accept(","));
    expect(")");
    return params;
  }

  BodyPtr parse_body(const TypeRef& /*result*/) {
    expect("{");
    auto body = std::make_shared<Body>();
    for (;;) {
      const Token& t = peek();
      if (t.is_ident("return")) {
        next();
        Stmt s;
        s.kind = StmtKind::Return;
        s.span = t.span;
        s.value = parse_expr();
        expect(";");
        body->push_back(std::move(s));
        break;
      }
      if (t.is("}")) fail(ErrorCode::SyntaxError, "function body must end with a return statement", t.span);
      if (at_end()) fail(ErrorCode::SyntaxError, "unterminated function body", t.span);
      Stmt s;
      s.kind = StmtKind::Let;
      s.span = t.span;
      if (accept_ident("auto")) {
        s.declared.reset();
      } else {
        TypeRef type = parse_type();
        check_value_type(type, t.span, "local");
        s.declared = type;
      }
      const Token& name = expect_ident("local name");
      s.name = name.text;
      expect("=");
      s.value = parse_expr();
      expect(";");
      declare_local(s.name, name.span);
      body->push_back(std::move(s));
    }
    if (!peek().is("}")) fail(ErrorCode::UnsupportedConstruct, "statements after return", peek().span);
    next();
    return body;
  }

  FnDecl parse_function(bool is_template, const std::string& tparam) {
    FnDecl fn;
    fn.is_template = is_template;
    fn.tparam = tparam;
    const SourceSpan type_span = peek().span;
    TypeRef result = parse_type();
    check_value_type(result, type_span, "return");
    const Token& name = expect_ident("function name");
    if (peek().is("::")) fail(ErrorCode::UnsupportedConstruct, "out-of-class member definitions", peek().span);
    fn.name = name.text;
    fn.span = name.span;
    fn.sig.result = result;
    if (!peek().is("(")) {
      fail(ErrorCode::UnsupportedConstruct, "global variables are not supported", name.span);
    }
    scopes_.assign(1, {});
    pending_refs_.clear();
    fn.sig.params = parse_params();
    const std::string qualified = ns_prefix_ + fn.name;
    // Register before the body so recursive and later references resolve.
    auto it = declared_.find(qualified);
    if (it == declared_.end()) {
      declared_[qualified] = is_template ? EntityKind::FunctionTemplate : EntityKind::Function;
    } else if (it->second == EntityKind::Function || it->second == EntityKind::FunctionTemplate ||
               it->second == EntityKind::OverloadSet) {
      it->second = EntityKind::OverloadSet;
    }
    fn.body = parse_body(result);
    scopes_.clear();
    if (!pending_refs_.empty()) {
      fail(ErrorCode::SyntaxError, "use of undeclared identifier '" + pending_refs_.front().first + "'",
           pending_refs_.front().second);
    }
    if (is_template) {
      bool uses_param = false;
      for (const auto& p : fn.sig.params) uses_param |= p.type.is_dependent();
      if (!uses_param) {
        fail(ErrorCode::UnsupportedConstruct, "template parameter must appear as a parameter type", fn.span);
      }
    }
    return fn;
  }

  // -- kernels --------------------------------------------------------------
  KernelAST parse_kernel_def() {
    const Token& kw = peek();
    if (!kw.is_ident("kernel")) fail(ErrorCode::SyntaxError, "expected 'kernel'" + found(), kw.span);
    next();
    KernelAST k;
    k.span = kw.span;
    k.name = expect_ident("kernel name").text;
    scopes_.assign(1, {});
    kernel_params_.clear();
    expect("(");
    if (!accept(")")) {
      do {
        const Token& name = expect_ident("parameter name");
        KernelParam p;
        p.name = name.text;
        p.span = name.span;
        if (accept(":")) {
          const SourceSpan span = peek().span;
          p.type = parse_type();
          if (!p.type->is_scalar() && p.type->kind() != TypeKind::Array2D) {
            fail(ErrorCode::UnsupportedConstruct, "kernel parameters must be scalars or arrays", span);
          }
        }
        declare_local(p.name, p.span);
        kernel_params_.insert(p.name);
        k.params.push_back(std::move(p));
      } while (accept(","));
      expect(")");
    }
    if (accept("->")) {
      const SourceSpan span = peek().span;
      k.result = parse_type();
      if (!k.result->is_scalar()) fail(ErrorCode::UnsupportedConstruct, "kernels return scalars", span);
    }
    expect("{");
    bool returned = false;
    while (!peek().is("}")) {
      if (at_end()) fail(ErrorCode::SyntaxError, "unterminated kernel body", peek().span);
      if (returned) fail(ErrorCode::SyntaxError, "return must be the final statement", peek().span);
      Stmt s = parse_kernel_stmt(0);
      returned = s.kind == StmtKind::Return;
      k.body.push_back(std::move(s));
    }
    if (!returned) fail(ErrorCode::SyntaxError, "kernel must end with a return statement", peek().span);
    next();
    scopes_.clear();
    kernel_params_.clear();
    loop_vars_.clear();
    return k;
  }

  bool is_loop_bound(const Expr& e) const {
    if (e.kind == ExprKind::Dim) return true;
    return e.kind == ExprKind::Literal && (std::holds_alternative<std::int64_t>(e.literal) ||
                                           std::holds_alternative<std::int32_t>(e.literal));
  }

  Stmt parse_kernel_stmt(int depth) {
    const Token& t = peek();
    Stmt s;
    s.span = t.span;
    if (t.is_ident("let")) {
      next();
      s.kind = StmtKind::Let;
      const Token& name = expect_ident("local name");
      s.name = name.text;
      if (accept(":")) s.declared = parse_type();
      expect("=");
      s.value = parse_expr();
      expect(";");
      declare_local(s.name, name.span);
      return s;
    }
    if (t.is_ident("return")) {
      next();
      if (depth > 0) fail(ErrorCode::SyntaxError, "return inside a loop", t.span);
      s.kind = StmtKind::Return;
      s.value = parse_expr();
      expect(";");
      return s;
    }
    if (t.is_ident("for")) {
      next();
      s.kind = StmtKind::For;
      const Token& var = expect_ident("loop variable");
      s.name = var.text;
      if (!peek().is_ident("in")) fail(ErrorCode::SyntaxError, "expected 'in'" + found(), peek().span);
      next();
      s.begin = parse_expr();
      expect("..");
      s.value = parse_expr();
      if (!is_loop_bound(*s.begin) || !is_loop_bound(*s.value)) {
        fail(ErrorCode::SyntaxError, "loop bounds must be integer literals or array dimensions", var.span);
      }
      expect("{");
      scopes_.emplace_back();
      declare_local(s.name, var.span);
      loop_vars_.insert(s.name);
      while (!peek().is("}")) {
        if (at_end()) fail(ErrorCode::SyntaxError, "unterminated loop body", peek().span);
        s.body.push_back(parse_kernel_stmt(depth + 1));
      }
      next();
      loop_vars_.erase(s.name);
      scopes_.pop_back();
      return s;
    }
    if (t.kind == TokenKind::Ident) {
      static const std::map<std::string, AssignOp> ops = {
          {"=", AssignOp::Set}, {"+=", AssignOp::Add}, {"-=", AssignOp::Sub}, {"*=", AssignOp::Mul}, {"/=", AssignOp::Div}};
      if (peek(1).kind == TokenKind::Punct && ops.count(peek(1).text)) {
        next();
        const Token& op = next();
        if (!in_scope(t.text)) fail(ErrorCode::UndeclaredLocal, "use of undeclared local '" + t.text + "'", t.span);
        if (kernel_params_.count(t.text)) fail(ErrorCode::SyntaxError, "cannot assign to a parameter", t.span);
        if (loop_vars_.count(t.text)) fail(ErrorCode::SyntaxError, "cannot assign to a loop variable", t.span);
        s.kind = StmtKind::Assign;
        s.name = t.text;
        s.assign_op = ops.at(op.text);
        s.value = parse_expr();
        expect(";");
        return s;
      }
      // `S s;` / `Vec<f64> v;`
      if (peek(1).kind == TokenKind::Ident || peek(1).is("<") || peek(1).is("::")) {
        TypeRef type = parse_type();
        if (!type.is_record()) {
          fail(ErrorCode::SyntaxError, "scalar locals are declared with 'let'", t.span);
        }
        const Token& name = expect_ident("variable name");
        expect(";");
        s.kind = StmtKind::Let;
        s.name = name.text;
        s.declared = type;
        s.value = expr::construct(type, t.span);
        declare_local(s.name, name.span);
        return s;
      }
    }
    fail(ErrorCode::SyntaxError, "expected a statement" + found(), t.span);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Engine* engine_;
  Mode mode_;
  std::string ns_prefix_;
  std::vector<std::string> tparams_;
  std::string pack_param_;
  std::unordered_map<std::string, EntityKind> declared_;
  std::vector<std::unordered_set<std::string>> scopes_;
  std::unordered_set<std::string> kernel_params_;
  std::unordered_set<std::string> loop_vars_;
  std::vector<std::pair<std::string, SourceSpan>> pending_refs_;
};

// ---------------------------------------------------------------------------
// Registration. Runs twice: a checking pass that only validates names, then a
// committing pass that cannot fail.

class Registrar {
 public:
  Registrar(Engine& engine, bool commit) : engine_(engine), commit_(commit) {}

  std::vector<EntityId> run(const std::vector<Decl>& decls) {
    std::vector<EntityId> top;
    register_scope(decls, "", kNoEntity, &top);
    return top;
  }

 private:
  bool exists(const std::string& qualified) const {
    return engine_.find(qualified).has_value() || planned_.count(qualified) > 0;
  }

  void claim(const std::string& qualified, const SourceSpan& span) {
    if (exists(qualified)) fail(ErrorCode::Redefinition, "redefinition of '" + qualified + "'", span);
    planned_.insert(qualified);
  }

  EntityId add(Entity e) {
    if (!commit_) return kNoEntity;
    const EntityId parent = e.parent;
    const EntityId id = engine_.add_entity(std::move(e));
    if (parent != kNoEntity) engine_.add_child(parent, id);
    return id;
  }

  static std::string overload_key(const std::string& qualified, const FnDecl& fn) {
    std::string key = qualified;
    if (fn.is_template) key += "<" + fn.tparam + ">";
    key += "(" + render_types(fn.sig.param_types()) + ")";
    return key;
  }

  Entity function_entity(const FnDecl& fn, const std::string& qualified, EntityId parent, EntityKind plain_kind) {
    Entity e;
    e.name = fn.name;
    e.qualified_name = qualified;
    e.kind = fn.is_template ? EntityKind::FunctionTemplate : plain_kind;
    e.parent = parent;
    e.signature = fn.sig;
    e.body = fn.body;
    e.span = fn.span;
    if (fn.is_template) {
      TemplateInfo info;
      info.params = {fn.tparam};
      e.template_info = std::move(info);
    }
    return e;
  }

  void register_functions(const std::vector<const FnDecl*>& group, const std::string& prefix, EntityId parent,
                          EntityKind plain_kind, std::vector<EntityId>* top) {
    const FnDecl& first = *group.front();
    const std::string qualified = prefix + first.name;
    if (group.size() == 1) {
      claim(qualified, first.span);
      EntityId id = add(function_entity(first, qualified, parent, plain_kind));
      if (top && commit_) top->push_back(id);
      return;
    }
    claim(qualified, first.span);
    std::vector<std::string> keys;
    for (const FnDecl* fn : group) {
      std::string key = overload_key(qualified, *fn);
      claim(key, fn->span);
      keys.push_back(std::move(key));
    }
    Entity set;
    set.name = first.name;
    set.qualified_name = qualified;
    set.kind = EntityKind::OverloadSet;
    set.parent = parent;
    set.span = first.span;
    const EntityId set_id = add(std::move(set));
    if (top && commit_) top->push_back(set_id);
    for (std::size_t i = 0; i < group.size(); ++i) {
      add(function_entity(*group[i], keys[i], set_id, plain_kind));
    }
  }

  void register_scope(const std::vector<Decl>& decls, const std::string& prefix, EntityId parent,
                      std::vector<EntityId>* top) {
    // Functions are grouped by name so overloads become one set, placed at
    // the position of their first declaration.
    std::map<std::string, std::vector<const FnDecl*>> groups;
    for (const auto& d : decls) {
      if (auto* fn = std::get_if<FnDecl>(&d)) groups[fn->name].push_back(fn);
    }
    std::set<std::string> done;
    for (const auto& d : decls) {
      if (auto* fn = std::get_if<FnDecl>(&d)) {
        if (done.insert(fn->name).second) register_functions(groups[fn->name], prefix, parent, EntityKind::Function, top);
      } else if (auto* cls = std::get_if<ClassDecl>(&d)) {
        register_class(*cls, prefix, parent, top);
      } else {
        const auto& ns = *std::get<std::shared_ptr<NsDecl>>(d);
        EntityId ns_id = kNoEntity;
        if (auto existing = engine_.find(ns.name)) {
          if (engine_.entity(*existing).kind != EntityKind::Namespace) {
            fail(ErrorCode::Redefinition, "redefinition of '" + ns.name + "'", ns.span);
          }
          ns_id = *existing;
        } else if (!planned_ns_.count(ns.name)) {
          claim(ns.name, ns.span);
          planned_ns_.insert(ns.name);
          Entity e;
          e.name = ns.name;
          e.qualified_name = ns.name;
          e.kind = EntityKind::Namespace;
          e.span = ns.span;
          ns_id = add(std::move(e));
          if (top && commit_) top->push_back(ns_id);
        } else if (commit_) {
          ns_id = *engine_.find(ns.name);
        }
        register_scope(ns.decls, ns.name + "::", ns_id, nullptr);
      }
    }
  }

  void register_class(const ClassDecl& cls, const std::string& prefix, EntityId parent, std::vector<EntityId>* top) {
    const std::string qualified = prefix + cls.name;
    if (cls.pattern.is_specialization) {
      // Attach to the primary template.
      std::string key = qualified + "<" + render_types(cls.pattern.spec_args) + ">#spec";
      if (planned_.count(key)) fail(ErrorCode::Redefinition, "redefinition of specialization", cls.span);
      if (auto id = engine_.find(qualified)) {
        const auto& info = engine_.entity(*id).template_info;
        if (!info || !info->is_variadic) {
          fail(ErrorCode::UnsupportedConstruct, "specializations are only supported for variadic templates", cls.span);
        }
        for (const auto& spec : info->specializations) {
          if (spec.spec_args == cls.pattern.spec_args) {
            fail(ErrorCode::Redefinition, "redefinition of specialization", cls.span);
          }
        }
        if (commit_) engine_.entity_mut(*id).template_info->specializations.push_back(cls.pattern);
      } else if (!planned_variadic_.count(qualified)) {
        fail(ErrorCode::UnsupportedConstruct, "specializations are only supported for variadic templates", cls.span);
      }
      planned_.insert(key);
      return;
    }
    claim(qualified, cls.span);
    if (cls.is_template) {
      Entity e;
      e.name = cls.name;
      e.qualified_name = qualified;
      e.kind = EntityKind::ClassTemplate;
      e.parent = parent;
      e.span = cls.span;
      e.is_struct = cls.pattern.is_struct;
      TemplateInfo info;
      info.params = cls.pattern.params;
      info.is_variadic = cls.pattern.variadic;
      info.primary = cls.pattern;
      e.template_info = std::move(info);
      if (cls.pattern.variadic) planned_variadic_.insert(qualified);
      EntityId id = add(std::move(e));
      if (top && commit_) top->push_back(id);
      return;
    }
    Entity e;
    e.name = cls.name;
    e.qualified_name = qualified;
    e.kind = EntityKind::Class;
    e.parent = parent;
    e.span = cls.span;
    e.is_struct = cls.pattern.is_struct;
    const EntityId id = add(std::move(e));
    if (top && commit_) top->push_back(id);
    register_members(engine_, cls.pattern.members, qualified, id, commit_, planned_);
  }

 public:
  /// Adds data members and methods of a class body under `scope`. Shared with
  /// template instantiation (which always commits).
  static void register_members(Engine& engine, const std::vector<MemberDecl>& members, const std::string& scope,
                               EntityId parent, bool commit, std::set<std::string>& planned) {
    auto claim_member = [&](const std::string& q, const SourceSpan& span) {
      if (engine.find(q) || planned.count(q)) fail(ErrorCode::Redefinition, "redefinition of '" + q + "'", span);
      planned.insert(q);
    };
    auto add_member = [&](Entity e) -> EntityId {
      if (!commit) return kNoEntity;
      const EntityId id = engine.add_entity(std::move(e));
      engine.add_child(parent, id);
      return id;
    };
    std::map<std::string, int> method_counts;
    for (const auto& m : members) {
      if (m.kind == MemberDecl::Kind::Method) ++method_counts[m.name];
    }
    std::set<std::string> done;
    for (const auto& m : members) {
      const std::string q = scope + "::" + m.name;
      if (m.kind == MemberDecl::Kind::Data) {
        claim_member(q, m.span);
        Entity e;
        e.name = m.name;
        e.qualified_name = q;
        e.kind = EntityKind::DataMember;
        e.parent = parent;
        e.member_type = m.type;
        e.member_init = m.init;
        e.span = m.span;
        add_member(std::move(e));
        continue;
      }
      if (!done.insert(m.name).second) continue;
      auto make_method = [&](const MemberDecl& md, std::string qn, EntityId owner) {
        Entity e;
        e.name = md.name;
        e.qualified_name = std::move(qn);
        e.kind = EntityKind::Method;
        e.parent = owner;
        e.signature = md.signature;
        e.body = md.body;
        e.span = md.span;
        return e;
      };
      if (method_counts[m.name] == 1) {
        claim_member(q, m.span);
        add_member(make_method(m, q, parent));
        continue;
      }
      claim_member(q, m.span);
      Entity set;
      set.name = m.name;
      set.qualified_name = q;
      set.kind = EntityKind::OverloadSet;
      set.parent = parent;
      set.span = m.span;
      std::vector<std::string> keys;
      for (const auto& other : members) {
        if (other.kind != MemberDecl::Kind::Method || other.name != m.name) continue;
        std::string key = q + "(" + render_types(other.signature.param_types()) + ")";
        claim_member(key, other.span);
        keys.push_back(std::move(key));
      }
      const EntityId set_id = add_member(std::move(set));
      std::size_t k = 0;
      for (const auto& other : members) {
        if (other.kind != MemberDecl::Kind::Method || other.name != m.name) continue;
        if (commit) {
          Entity e = make_method(other, keys[k], set_id);
          const EntityId id = engine.add_entity(std::move(e));
          engine.add_child(set_id, id);
        }
        ++k;
      }
    }
  }

 private:
  Engine& engine_;
  bool commit_;
  std::set<std::string> planned_;
  std::set<std::string> planned_ns_;
  std::set<std::string> planned_variadic_;
};

}  // namespace

void register_class_members(Engine& engine, const std::vector<MemberDecl>& members, const std::string& scope,
                            EntityId parent) {
  std::set<std::string> planned;
  Registrar::register_members(engine, members, scope, parent, true, planned);
}

std::vector<EntityId> parse_translation_unit(Engine& engine, std::string_view source) {
  Parser parser(source, &engine, Mode::Decl);
  const std::vector<Decl> decls = parser.parse_tu();
  Registrar(engine, false).run(decls);
  return Registrar(engine, true).run(decls);
}

KernelAST parse_kernel(std::string_view source) {
  auto kernels = parse_kernels(source);
  if (kernels.size() != 1) {
    throw Error(ErrorCode::SyntaxError, "expected exactly one kernel, found " + std::to_string(kernels.size()),
                SourceSpan{1, 1, 0});
  }
  return std::move(kernels.front());
}

std::vector<KernelAST> parse_kernels(std::string_view source) {
  return Parser(source, nullptr, Mode::Kernel).parse_kernel_file();
}

TypeRef parse_type(std::string_view text, const Engine& engine) {
  TypeRef t = Parser(text, nullptr, Mode::Kernel).parse_standalone_type();
  return engine.resolve_type(t);
}

Scalar parse_scalar_literal(std::string_view text) {
  return Parser(text, nullptr, Mode::Kernel).parse_standalone_literal();
}

}  // namespace reflexbridge
