// types.hpp - canonical type references.
//
// A TypeRef is a value: builtins, classes, template instantiations, template
// parameters (only inside un-instantiated template bodies) and 2-D arrays.
// Two TypeRefs are equal exactly when their canonical renderings are equal.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reflexbridge {

/// Identifier of an entity within one engine. Zero means "unresolved".
enum class EntityId : std::uint32_t {};

inline constexpr EntityId kNoEntity{0};

inline std::uint32_t to_underlying(EntityId id) { return static_cast<std::uint32_t>(id); }

enum class TypeKind : std::uint8_t {
  Void,
  Bool,
  I32,
  I64,
  F32,
  F64,
  Class,
  Instantiation,
  TemplateParam,
  Array2D,
};

class TypeRef {
 public:
  TypeRef() = default;

  static TypeRef builtin(TypeKind kind);
  static TypeRef void_() { return builtin(TypeKind::Void); }
  static TypeRef bool_() { return builtin(TypeKind::Bool); }
  static TypeRef i32() { return builtin(TypeKind::I32); }
  static TypeRef i64() { return builtin(TypeKind::I64); }
  static TypeRef f32() { return builtin(TypeKind::F32); }
  static TypeRef f64() { return builtin(TypeKind::F64); }
  /// `name` is the class's qualified name; `id` may be kNoEntity for an
  /// unresolved name (kernel sources are parsed without an engine).
  static TypeRef class_type(EntityId id, std::string name);
  static TypeRef instantiation(EntityId template_id, std::string template_name,
                               std::vector<TypeRef> args);
  /// `pack` marks a variadic pack expansion (`Rest...`).
  static TypeRef template_param(std::string name, bool pack = false);
  static TypeRef array2d(TypeRef element);

  TypeKind kind() const noexcept { return kind_; }
  EntityId entity() const noexcept { return entity_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<TypeRef>& args() const noexcept { return args_; }
  bool is_pack() const noexcept { return pack_; }
  const TypeRef& element() const { return args_.front(); }

  bool is_builtin() const noexcept { return kind_ <= TypeKind::F64; }
  bool is_scalar() const noexcept { return kind_ >= TypeKind::Bool && kind_ <= TypeKind::F64; }
  bool is_integer() const noexcept { return kind_ == TypeKind::I32 || kind_ == TypeKind::I64; }
  bool is_floating() const noexcept { return kind_ == TypeKind::F32 || kind_ == TypeKind::F64; }
  bool is_record() const noexcept {
    return kind_ == TypeKind::Class || kind_ == TypeKind::Instantiation;
  }

  /// True if any TemplateParam node occurs in this tree.
  bool is_dependent() const;

  // Entity ids are not compared: qualified names are unique per engine, so
  // resolved and unresolved references to the same class compare equal.
  friend bool operator==(const TypeRef& a, const TypeRef& b) {
    return a.kind_ == b.kind_ && a.pack_ == b.pack_ && a.name_ == b.name_ && a.args_ == b.args_;
  }

 private:
  TypeKind kind_ = TypeKind::Void;
  bool pack_ = false;
  EntityId entity_ = kNoEntity;
  std::string name_;
  std::vector<TypeRef> args_;
};

/// Canonical spelling: `f64`, `S`, `Vec<Vec<f64>>`, `Tuple<f64, f64>`, `Tuple<>`,
/// `array2d<f64>`. Template parameters render as their name (`Rest...` for packs).
std::string render_type(const TypeRef& t);

std::string render_types(const std::vector<TypeRef>& types);

bool type_equal(const TypeRef& a, const TypeRef& b);

/// Builtin spelling to kind; accepts canonical names and the C++ spellings
/// `int`, `long`, `float`, `double`, `bool`, `void`.
std::optional<TypeKind> builtin_kind(std::string_view spelling);

std::string_view builtin_name(TypeKind kind);

}  // namespace reflexbridge

template <>
struct std::hash<reflexbridge::TypeRef> {
  std::size_t operator()(const reflexbridge::TypeRef& t) const {
    return std::hash<std::string>{}(reflexbridge::render_type(t));
  }
};
