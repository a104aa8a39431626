// scalar.hpp - native scalar values and the arithmetic both evaluators share.
//
// The dynamic interpreter and the typed executor must agree bit-for-bit, so
// every arithmetic and conversion rule lives here once.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <variant>

#include "reflexbridge/error.hpp"
#include "reflexbridge/types.hpp"

namespace reflexbridge {

using Scalar = std::variant<bool, std::int32_t, std::int64_t, float, double>;

TypeKind scalar_kind(const Scalar& s);

inline TypeRef scalar_type(const Scalar& s) { return TypeRef::builtin(scalar_kind(s)); }

/// Canonical literal text with type suffix: `42i32`, `1.5f64`, `true`.
std::string format_scalar(const Scalar& s);

/// Shortest round-trip decimal for a double, always containing '.', 'e', "inf" or "nan".
std::string format_double(double v);

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Lt };

std::string_view binop_symbol(BinOp op);

template <TypeKind K>
struct NativeType;
template <> struct NativeType<TypeKind::Bool> { using type = bool; };
template <> struct NativeType<TypeKind::I32> { using type = std::int32_t; };
template <> struct NativeType<TypeKind::I64> { using type = std::int64_t; };
template <> struct NativeType<TypeKind::F32> { using type = float; };
template <> struct NativeType<TypeKind::F64> { using type = double; };

/// Two's-complement wrapping arithmetic for integers, IEEE for floats.
/// Integer division by zero raises EvalError.
template <class T>
inline T apply_binop(BinOp op, T a, T b) {
  if constexpr (std::is_same_v<T, bool>) {
    return apply_binop<std::int32_t>(op, a, b) != 0;
  } else if constexpr (std::is_integral_v<T>) {
    using U = std::make_unsigned_t<T>;
    switch (op) {
      case BinOp::Add: return static_cast<T>(static_cast<U>(a) + static_cast<U>(b));
      case BinOp::Sub: return static_cast<T>(static_cast<U>(a) - static_cast<U>(b));
      case BinOp::Mul: return static_cast<T>(static_cast<U>(a) * static_cast<U>(b));
      case BinOp::Div:
        if (b == 0) throw Error(ErrorCode::EvalError, "integer division by zero");
        if (b == -1) return static_cast<T>(U{0} - static_cast<U>(a));
        return static_cast<T>(a / b);
      case BinOp::Lt: return static_cast<T>(a < b);
    }
  } else {
    switch (op) {
      case BinOp::Add: return a + b;
      case BinOp::Sub: return a - b;
      case BinOp::Mul: return a * b;
      case BinOp::Div: return a / b;
      case BinOp::Lt: return static_cast<T>(a < b);
    }
  }
  return T{};
}

template <class T>
inline T apply_neg(T a) {
  if constexpr (std::is_same_v<T, bool>) {
    return a;
  } else if constexpr (std::is_integral_v<T>) {
    using U = std::make_unsigned_t<T>;
    return static_cast<T>(U{0} - static_cast<U>(a));
  } else {
    return -a;
  }
}

/// Value conversion `To(from)`: truncation toward zero for float to int,
/// EvalError when the truncated value is not representable (or NaN).
template <class To, class From>
inline To convert_value(From v) {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (std::is_same_v<To, bool>) {
    return v != From{};
  } else if constexpr (std::is_integral_v<To> && std::is_floating_point_v<From>) {
    const double d = static_cast<double>(v);
    // 2^31 and 2^63 bounds are exact in double.
    constexpr double hi = std::is_same_v<To, std::int32_t> ? 2147483648.0 : 9223372036854775808.0;
    if (!(d > -hi - 1.0 && d < hi)) {
      throw Error(ErrorCode::EvalError, "float to integer conversion out of range");
    }
    const double t = std::trunc(d);
    if (t < -hi) throw Error(ErrorCode::EvalError, "float to integer conversion out of range");
    return static_cast<To>(t);
  } else {
    return static_cast<To>(v);
  }
}

/// Converts a scalar to the builtin kind `to` (any scalar pair is allowed).
Scalar convert_scalar(const Scalar& s, TypeKind to);

/// Zero of the given builtin kind.
Scalar zero_scalar(TypeKind kind);

}  // namespace reflexbridge
