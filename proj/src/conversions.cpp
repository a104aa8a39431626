#include "reflexbridge/conversions.hpp"

namespace reflexbridge {

std::optional<ConversionRank> conversion_rank(const TypeRef& from, const TypeRef& to) {
  if (from == to) return ConversionRank::Exact;
  const TypeKind f = from.kind();
  const TypeKind t = to.kind();
  if (f == TypeKind::I32 && t == TypeKind::I64) return ConversionRank::IntWidening;
  if (f == TypeKind::F32 && t == TypeKind::F64) return ConversionRank::FloatWidening;
  if (from.is_integer() && to.is_floating()) return ConversionRank::IntToFloat;
  if (f == TypeKind::Bool && to.is_integer()) return ConversionRank::BoolToInt;
  return std::nullopt;
}

std::optional<TypeRef> arithmetic_result(const TypeRef& a, const TypeRef& b) {
  if (!a.is_scalar() || !b.is_scalar()) return std::nullopt;
  const TypeRef x = a.kind() == TypeKind::Bool ? TypeRef::i32() : a;
  const TypeRef y = b.kind() == TypeKind::Bool ? TypeRef::i32() : b;
  if (x == y) return x;
  if (implicitly_convertible(x, y)) return y;
  if (implicitly_convertible(y, x)) return x;
  return std::nullopt;
}

TypeRef negation_result(const TypeRef& t) { return t.kind() == TypeKind::Bool ? TypeRef::i32() : t; }

Scalar eval_binary(BinOp op, const Scalar& a, const Scalar& b) {
  const auto result = arithmetic_result(scalar_type(a), scalar_type(b));
  if (!result) throw Error(ErrorCode::TypeError, "operands have no common arithmetic type");
  const TypeKind k = result->kind();
  const Scalar x = convert_scalar(a, k);
  const Scalar y = convert_scalar(b, k);
  return std::visit(
      [&](auto lhs) -> Scalar {
        using T = decltype(lhs);
        const T out = apply_binop<T>(op, lhs, std::get<T>(y));
        if (op == BinOp::Lt) return static_cast<bool>(out);
        return out;
      },
      x);
}

Scalar eval_negate(const Scalar& a) {
  const Scalar x = convert_scalar(a, negation_result(scalar_type(a)).kind());
  return std::visit([](auto v) -> Scalar { return apply_neg(v); }, x);
}

Scalar convert_implicit(const Scalar& v, const TypeRef& to) {
  const TypeRef from = scalar_type(v);
  if (!implicitly_convertible(from, to)) {
    throw Error(ErrorCode::TypeError, "no implicit conversion from " + render_type(from) + " to " + render_type(to));
  }
  return convert_scalar(v, to.kind());
}

}  // namespace reflexbridge
