#include "reflexbridge/value.hpp"

#include <random>

#include "reflexbridge/conversions.hpp"

namespace reflexbridge {

Array2D::Array2D(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Array2D::Array2D(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::TypeError, "array data has " + std::to_string(data_.size()) + " elements, expected " +
                                          std::to_string(rows_ * cols_));
  }
}

Array2D Array2D::random(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(rows * cols);
  for (auto& d : data) d = dist(rng);
  return Array2D(rows, cols, std::move(data));
}

double Array2D::at(std::int64_t i, std::int64_t j) const {
  if (i < 0 || j < 0 || static_cast<std::uint64_t>(i) >= rows_ || static_cast<std::uint64_t>(j) >= cols_) {
    throw Error(ErrorCode::IndexOutOfBounds, "index (" + std::to_string(i) + ", " + std::to_string(j) +
                                                 ") out of bounds for " + std::to_string(rows_) + "x" +
                                                 std::to_string(cols_) + " array");
  }
  return data_[static_cast<std::size_t>(i) * cols_ + static_cast<std::size_t>(j)];
}

std::string_view box_tag_name(BoxTag tag) {
  switch (tag) {
    case BoxTag::Bool: return "bool";
    case BoxTag::I32: return "i32";
    case BoxTag::I64: return "i64";
    case BoxTag::F32: return "f32";
    case BoxTag::F64: return "f64";
    case BoxTag::Inst: return "inst";
    case BoxTag::Arr: return "array2d<f64>";
  }
  return "?";
}

Scalar BoxedValue::scalar() const {
  switch (payload_.index()) {
    case 0: return std::get<0>(payload_);
    case 1: return std::get<1>(payload_);
    case 2: return std::get<2>(payload_);
    case 3: return std::get<3>(payload_);
    case 4: return std::get<4>(payload_);
    default:
      throw Error(ErrorCode::TagMismatch, "expected a scalar, got " + std::string(box_tag_name(tag())));
  }
}

const InstancePtr& BoxedValue::instance() const {
  if (tag() != BoxTag::Inst) {
    throw Error(ErrorCode::TagMismatch, "expected an instance, got " + std::string(box_tag_name(tag())));
  }
  return std::get<InstancePtr>(payload_);
}

const ArrayPtr& BoxedValue::array() const {
  if (tag() != BoxTag::Arr) {
    throw Error(ErrorCode::TagMismatch, "expected an array, got " + std::string(box_tag_name(tag())));
  }
  return std::get<ArrayPtr>(payload_);
}

TypeRef BoxedValue::type() const {
  if (is_scalar()) return scalar_type(scalar());
  if (tag() == BoxTag::Arr) return TypeRef::array2d(TypeRef::f64());
  return std::get<InstancePtr>(payload_)->type;
}

BoxedValue box(const Scalar& v) {
  return std::visit([](auto x) { return BoxedValue(BoxedValue::Payload(x)); }, v);
}

BoxedValue box(ArrayPtr a) { return BoxedValue(BoxedValue::Payload(std::move(a))); }

BoxedValue box(InstancePtr inst) { return BoxedValue(BoxedValue::Payload(std::move(inst))); }

BoxedValue box(const NativeValue& v) {
  if (const auto* s = std::get_if<Scalar>(&v)) return box(*s);
  return box(std::get<ArrayPtr>(v));
}

Scalar unbox(const BoxedValue& b, const TypeRef& expected) {
  if (!b.is_scalar() || !expected.is_scalar()) {
    throw Error(ErrorCode::TagMismatch,
                "cannot unbox " + std::string(box_tag_name(b.tag())) + " as " + render_type(expected));
  }
  const Scalar s = b.scalar();
  const TypeRef actual = scalar_type(s);
  if (actual == expected) return s;
  if (!implicitly_convertible(actual, expected)) {
    throw Error(ErrorCode::TagMismatch, "cannot unbox " + render_type(actual) + " as " + render_type(expected));
  }
  return convert_scalar(s, expected.kind());
}

NativeValue unbox_native(const BoxedValue& b) {
  if (b.is_scalar()) return b.scalar();
  return b.array();
}

}  // namespace reflexbridge
