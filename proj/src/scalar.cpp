#include "reflexbridge/scalar.hpp"

#include <charconv>
#include <cstdio>

namespace reflexbridge {

TypeKind scalar_kind(const Scalar& s) {
  switch (s.index()) {
    case 0: return TypeKind::Bool;
    case 1: return TypeKind::I32;
    case 2: return TypeKind::I64;
    case 3: return TypeKind::F32;
    default: return TypeKind::F64;
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

namespace {
std::string format_float(float v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}
}  // namespace

std::string format_scalar(const Scalar& s) {
  return std::visit(
      [](auto v) -> std::string {
        using T = decltype(v);
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int32_t>) {
          return std::to_string(v) + "i32";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v) + "i64";
        } else if constexpr (std::is_same_v<T, float>) {
          return format_float(v) + "f32";
        } else {
          return format_double(v) + "f64";
        }
      },
      s);
}

std::string_view binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Lt: return "<";
  }
  return "?";
}

Scalar convert_scalar(const Scalar& s, TypeKind to) {
  return std::visit(
      [to](auto v) -> Scalar {
        switch (to) {
          case TypeKind::Bool: return convert_value<bool>(v);
          case TypeKind::I32: return convert_value<std::int32_t>(v);
          case TypeKind::I64: return convert_value<std::int64_t>(v);
          case TypeKind::F32: return convert_value<float>(v);
          case TypeKind::F64: return convert_value<double>(v);
          default:
            throw Error(ErrorCode::TypeError, "conversion to non-scalar type");
        }
      },
      s);
}

Scalar zero_scalar(TypeKind kind) {
  switch (kind) {
    case TypeKind::Bool: return false;
    case TypeKind::I32: return std::int32_t{0};
    case TypeKind::I64: return std::int64_t{0};
    case TypeKind::F32: return 0.0f;
    case TypeKind::F64: return 0.0;
    default: throw Error(ErrorCode::TypeError, "no zero value for non-scalar type");
  }
}

}  // namespace reflexbridge
