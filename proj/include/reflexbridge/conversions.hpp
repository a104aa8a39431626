// conversions.hpp - the implicit conversion ranking used by overload
// resolution, argument passing, and arithmetic on both execution paths.
//
//   R0 exact            T -> T
//   R1 int widening     i32 -> i64
//   R2 float widening   f32 -> f64
//   R3 int to float     i32/i64 -> f32/f64
//   R4 bool to int      bool -> i32/i64
//
// Everything else (narrowing, float -> int, anything -> bool, distinct
// classes) is not an implicit conversion.
#pragma once

#include <optional>

#include "reflexbridge/scalar.hpp"
#include "reflexbridge/types.hpp"

namespace reflexbridge {

enum class ConversionRank : std::uint8_t { Exact = 0, IntWidening = 1, FloatWidening = 2, IntToFloat = 3, BoolToInt = 4 };

std::optional<ConversionRank> conversion_rank(const TypeRef& from, const TypeRef& to);

inline bool implicitly_convertible(const TypeRef& from, const TypeRef& to) {
  return conversion_rank(from, to).has_value();
}

/// Result type of `a op b`: bool operands are promoted to i32, then the
/// operand that the other converts to implicitly wins. nullopt when neither
/// converts (non-scalars).
std::optional<TypeRef> arithmetic_result(const TypeRef& a, const TypeRef& b);

/// Result type of unary minus: bool promotes to i32.
TypeRef negation_result(const TypeRef& t);

/// `a op b` on values, with both operands first converted to
/// arithmetic_result. Throws TypeError when the operands have no common type.
Scalar eval_binary(BinOp op, const Scalar& a, const Scalar& b);

Scalar eval_negate(const Scalar& a);

/// Implicit conversion of a value to `to`; TypeError when not allowed.
Scalar convert_implicit(const Scalar& v, const TypeRef& to);

}  // namespace reflexbridge
