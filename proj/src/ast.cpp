#include "reflexbridge/ast.hpp"

#include <utility>

namespace reflexbridge {
namespace expr {

namespace {
std::shared_ptr<Expr> make(ExprKind kind, SourceSpan span) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->span = span;
  return e;
}
}  // namespace

ExprPtr literal(Scalar value, SourceSpan span) {
  auto e = make(ExprKind::Literal, span);
  e->literal = value;
  e->type = scalar_type(value);
  return e;
}

ExprPtr ref(std::string name, SourceSpan span) {
  auto e = make(ExprKind::Ref, span);
  e->name = std::move(name);
  return e;
}

ExprPtr index(ExprPtr array, ExprPtr row, ExprPtr col, SourceSpan span) {
  auto e = make(ExprKind::Index, span);
  e->operands = {std::move(array), std::move(row), std::move(col)};
  return e;
}

ExprPtr dim(ExprPtr array, int axis, SourceSpan span) {
  auto e = make(ExprKind::Dim, span);
  e->axis = axis;
  e->operands = {std::move(array)};
  return e;
}

ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs, SourceSpan span) {
  auto e = make(ExprKind::Binary, span);
  e->op = op;
  e->operands = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr neg(ExprPtr value, SourceSpan span) {
  auto e = make(ExprKind::Neg, span);
  e->operands = {std::move(value)};
  return e;
}

ExprPtr cast(TypeRef to, ExprPtr value, SourceSpan span) {
  auto e = make(ExprKind::Cast, span);
  e->type = std::move(to);
  e->operands = {std::move(value)};
  return e;
}

ExprPtr call(std::string callee, std::vector<ExprPtr> args, std::optional<std::vector<TypeRef>> targs,
             SourceSpan span) {
  auto e = make(ExprKind::Call, span);
  e->name = std::move(callee);
  e->operands = std::move(args);
  if (targs) {
    e->has_targs = true;
    e->targs = std::move(*targs);
  }
  return e;
}

ExprPtr member(ExprPtr object, std::string name, SourceSpan span) {
  auto e = make(ExprKind::Member, span);
  e->name = std::move(name);
  e->operands = {std::move(object)};
  return e;
}

ExprPtr method_call(ExprPtr object, std::string name, std::vector<ExprPtr> args, SourceSpan span) {
  auto e = make(ExprKind::MethodCall, span);
  e->name = std::move(name);
  e->operands.push_back(std::move(object));
  for (auto& a : args) e->operands.push_back(std::move(a));
  return e;
}

ExprPtr construct(TypeRef type, SourceSpan span) {
  auto e = make(ExprKind::Construct, span);
  e->type = std::move(type);
  return e;
}

}  // namespace expr

std::size_t count_nodes(const Expr& e) {
  std::size_t n = 1;
  for (const auto& op : e.operands) n += count_nodes(*op);
  return n;
}

std::size_t count_nodes(const std::vector<Stmt>& stmts) {
  std::size_t n = 0;
  for (const auto& s : stmts) {
    ++n;
    if (s.value) n += count_nodes(*s.value);
    if (s.begin) n += count_nodes(*s.begin);
    n += count_nodes(s.body);
  }
  return n;
}

namespace {
bool same_bits(const Scalar& a, const Scalar& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](auto x) {
        using T = decltype(x);
        T y = std::get<T>(b);
        if constexpr (std::is_floating_point_v<T>) {
          return (std::isnan(x) && std::isnan(y)) || (x == y && std::signbit(x) == std::signbit(y));
        } else {
          return x == y;
        }
      },
      a);
}

bool opt_expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return expr_equal(*a, *b);
}
}  // namespace

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.name != b.name || a.op != b.op || a.axis != b.axis ||
      a.has_targs != b.has_targs || a.targs != b.targs ||
      a.operands.size() != b.operands.size()) {
    return false;
  }
  if (a.kind == ExprKind::Literal && !same_bits(a.literal, b.literal)) return false;
  if ((a.kind == ExprKind::Cast || a.kind == ExprKind::Construct) && a.type != b.type) return false;
  for (std::size_t i = 0; i < a.operands.size(); ++i) {
    if (!expr_equal(*a.operands[i], *b.operands[i])) return false;
  }
  return true;
}

bool stmts_equal(const std::vector<Stmt>& a, const std::vector<Stmt>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Stmt& x = a[i];
    const Stmt& y = b[i];
    if (x.kind != y.kind || x.name != y.name || x.declared != y.declared ||
        x.assign_op != y.assign_op || !opt_expr_equal(x.value, y.value) ||
        !opt_expr_equal(x.begin, y.begin) || !stmts_equal(x.body, y.body)) {
      return false;
    }
  }
  return true;
}

}  // namespace reflexbridge
