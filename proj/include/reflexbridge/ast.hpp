// ast.hpp - expression and statement trees shared by function bodies and kernels.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reflexbridge/error.hpp"
#include "reflexbridge/scalar.hpp"
#include "reflexbridge/types.hpp"

namespace reflexbridge {

enum class ExprKind : std::uint8_t {
  Literal,     // literal
  Ref,         // name: param, local, or (in method bodies) data member
  Index,       // operands: array, row, column
  Dim,         // operands: array; axis 0 = rows, 1 = cols
  Binary,      // op, operands: lhs, rhs
  Neg,         // operands: value
  Cast,        // type(operand)
  Call,        // name(operands...), optional explicit template args
  Member,      // operands[0].name
  MethodCall,  // operands[0].name(operands[1..])
  Construct,   // default construction of `type`
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::Literal;
  SourceSpan span;
  Scalar literal;
  std::string name;
  TypeRef type;
  BinOp op = BinOp::Add;
  int axis = 0;
  bool has_targs = false;
  std::vector<TypeRef> targs;
  std::vector<ExprPtr> operands;
};

namespace expr {
ExprPtr literal(Scalar value, SourceSpan span = {});
ExprPtr ref(std::string name, SourceSpan span = {});
ExprPtr index(ExprPtr array, ExprPtr row, ExprPtr col, SourceSpan span = {});
ExprPtr dim(ExprPtr array, int axis, SourceSpan span = {});
ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs, SourceSpan span = {});
ExprPtr neg(ExprPtr value, SourceSpan span = {});
ExprPtr cast(TypeRef to, ExprPtr value, SourceSpan span = {});
ExprPtr call(std::string callee, std::vector<ExprPtr> args, std::optional<std::vector<TypeRef>> targs,
             SourceSpan span = {});
ExprPtr member(ExprPtr object, std::string name, SourceSpan span = {});
ExprPtr method_call(ExprPtr object, std::string name, std::vector<ExprPtr> args, SourceSpan span = {});
ExprPtr construct(TypeRef type, SourceSpan span = {});
}  // namespace expr

/// Number of expression nodes in the tree rooted at `e`.
std::size_t count_nodes(const Expr& e);

bool expr_equal(const Expr& a, const Expr& b);

enum class StmtKind : std::uint8_t { Let, For, Assign, Return };

enum class AssignOp : std::uint8_t { Set, Add, Sub, Mul, Div };

struct Stmt {
  StmtKind kind = StmtKind::Return;
  SourceSpan span;
  std::string name;                   // Let / Assign target, For induction variable
  std::optional<TypeRef> declared;    // Let: declared type (absent for `let`/`auto`)
  AssignOp assign_op = AssignOp::Set;
  ExprPtr value;                      // Let init, Assign rhs, Return value, For upper bound
  ExprPtr begin;                      // For lower bound
  std::vector<Stmt> body;             // For body
};

std::size_t count_nodes(const std::vector<Stmt>& stmts);

bool stmts_equal(const std::vector<Stmt>& a, const std::vector<Stmt>& b);

struct KernelParam {
  std::string name;
  std::optional<TypeRef> type;
  SourceSpan span;
};

struct KernelAST {
  std::string name;
  std::vector<KernelParam> params;
  std::optional<TypeRef> result;
  std::vector<Stmt> body;
  SourceSpan span;
};

}  // namespace reflexbridge
