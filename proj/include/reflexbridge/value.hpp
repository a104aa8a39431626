// value.hpp - native arrays, boxed values and instances for the dynamic path.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "reflexbridge/scalar.hpp"
#include "reflexbridge/types.hpp"

namespace reflexbridge {

/// Row-major 2-D array of f64.
class Array2D {
 public:
  Array2D(std::size_t rows, std::size_t cols, double fill = 0.0);
  Array2D(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Array2D zeros(std::size_t rows, std::size_t cols) { return Array2D(rows, cols, 0.0); }
  static Array2D ones(std::size_t rows, std::size_t cols) { return Array2D(rows, cols, 1.0); }
  /// Uniform values in [lo, hi) from a 64-bit Mersenne twister seeded with `seed`.
  static Array2D random(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -10.0, double hi = 10.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<double>& data() const noexcept { return data_; }

  /// Bounds-checked element read; throws IndexOutOfBounds.
  double at(std::int64_t i, std::int64_t j) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

using ArrayPtr = std::shared_ptr<const Array2D>;

/// A kernel argument or result on the unboxed side.
using NativeValue = std::variant<Scalar, ArrayPtr>;

struct Instance;
using InstancePtr = std::shared_ptr<Instance>;

enum class BoxTag : std::uint8_t { Bool, I32, I64, F32, F64, Inst, Arr };

std::string_view box_tag_name(BoxTag tag);

/// Tagged dynamic value; the tag always agrees with the payload.
class BoxedValue {
 public:
  BoxedValue() : payload_(false) {}

  BoxTag tag() const noexcept { return static_cast<BoxTag>(payload_.index()); }
  bool is_scalar() const noexcept { return payload_.index() <= 4; }

  Scalar scalar() const;
  const InstancePtr& instance() const;
  const ArrayPtr& array() const;
  TypeRef type() const;

  friend BoxedValue box(const Scalar& v);
  friend BoxedValue box(ArrayPtr a);
  friend BoxedValue box(InstancePtr inst);

 private:
  using Payload = std::variant<bool, std::int32_t, std::int64_t, float, double, InstancePtr, ArrayPtr>;
  explicit BoxedValue(Payload p) : payload_(std::move(p)) {}
  Payload payload_;
};

BoxedValue box(const Scalar& v);
BoxedValue box(ArrayPtr a);
BoxedValue box(InstancePtr inst);
BoxedValue box(const NativeValue& v);

/// Extracts the value as `expected`, applying an implicit widening when the
/// tag differs legally. Throws TagMismatch otherwise.
Scalar unbox(const BoxedValue& b, const TypeRef& expected);

/// Exact unboxing into the native value representation.
NativeValue unbox_native(const BoxedValue& b);

/// An object of a bound class on the dynamic path. Slots are looked up by
/// name, as attribute access would be.
struct Instance {
  EntityId cls = kNoEntity;
  TypeRef type;
  std::unordered_map<std::string, BoxedValue> slots;
};

}  // namespace reflexbridge
