#include "reflexbridge/types.hpp"

#include <utility>

namespace reflexbridge {

TypeRef TypeRef::builtin(TypeKind kind) {
  TypeRef t;
  t.kind_ = kind;
  return t;
}

TypeRef TypeRef::class_type(EntityId id, std::string name) {
  TypeRef t;
  t.kind_ = TypeKind::Class;
  t.entity_ = id;
  t.name_ = std::move(name);
  return t;
}

TypeRef TypeRef::instantiation(EntityId template_id, std::string template_name,
                               std::vector<TypeRef> args) {
  TypeRef t;
  t.kind_ = TypeKind::Instantiation;
  t.entity_ = template_id;
  t.name_ = std::move(template_name);
  t.args_ = std::move(args);
  return t;
}

TypeRef TypeRef::template_param(std::string name, bool pack) {
  TypeRef t;
  t.kind_ = TypeKind::TemplateParam;
  t.name_ = std::move(name);
  t.pack_ = pack;
  return t;
}

TypeRef TypeRef::array2d(TypeRef element) {
  TypeRef t;
  t.kind_ = TypeKind::Array2D;
  t.args_.push_back(std::move(element));
  return t;
}

bool TypeRef::is_dependent() const {
  if (kind_ == TypeKind::TemplateParam) return true;
  for (const auto& a : args_) {
    if (a.is_dependent()) return true;
  }
  return false;
}

std::string_view builtin_name(TypeKind kind) {
  switch (kind) {
    case TypeKind::Void: return "void";
    case TypeKind::Bool: return "bool";
    case TypeKind::I32: return "i32";
    case TypeKind::I64: return "i64";
    case TypeKind::F32: return "f32";
    case TypeKind::F64: return "f64";
    default: return "";
  }
}

std::optional<TypeKind> builtin_kind(std::string_view s) {
  if (s == "void") return TypeKind::Void;
  if (s == "bool") return TypeKind::Bool;
  if (s == "i32" || s == "int") return TypeKind::I32;
  if (s == "i64" || s == "long") return TypeKind::I64;
  if (s == "f32" || s == "float") return TypeKind::F32;
  if (s == "f64" || s == "double") return TypeKind::F64;
  return std::nullopt;
}

namespace {

void render_into(const TypeRef& t, std::string& out) {
  switch (t.kind()) {
    case TypeKind::Class:
      out += t.name();
      return;
    case TypeKind::TemplateParam:
      out += t.name();
      if (t.is_pack()) out += "...";
      return;
    case TypeKind::Array2D:
      out += "array2d<";
      render_into(t.element(), out);
      out += '>';
      return;
    case TypeKind::Instantiation: {
      out += t.name();
      out += '<';
      bool first = true;
      for (const auto& a : t.args()) {
        if (!first) out += ", ";
        first = false;
        render_into(a, out);
      }
      out += '>';
      return;
    }
    default:
      out += builtin_name(t.kind());
  }
}

}  // namespace

std::string render_type(const TypeRef& t) {
  std::string out;
  render_into(t, out);
  return out;
}

std::string render_types(const std::vector<TypeRef>& types) {
  std::string out;
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (i) out += ", ";
    render_into(types[i], out);
  }
  return out;
}

bool type_equal(const TypeRef& a, const TypeRef& b) { return a == b; }

}  // namespace reflexbridge
