// entity.hpp - nodes of the declaration model.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reflexbridge/ast.hpp"
#include "reflexbridge/types.hpp"

namespace reflexbridge {

enum class EntityKind : std::uint8_t {
  Namespace,
  Class,
  ClassTemplate,
  FunctionTemplate,
  OverloadSet,
  Function,
  Method,
  DataMember,
  Instantiation,
};

std::string_view entity_kind_name(EntityKind kind);

struct Param {
  std::string name;
  TypeRef type;
  friend bool operator==(const Param&, const Param&) = default;
};

struct Signature {
  std::vector<Param> params;
  TypeRef result;

  std::vector<TypeRef> param_types() const;
  friend bool operator==(const Signature&, const Signature&) = default;
};

using Body = std::vector<Stmt>;
using BodyPtr = std::shared_ptr<const Body>;

/// A member of a class-template pattern, before substitution.
struct MemberDecl {
  enum class Kind : std::uint8_t { Data, Method };
  Kind kind = Kind::Data;
  std::string name;
  SourceSpan span;
  TypeRef type;  // Data
  ExprPtr init;  // Data, optional
  Signature signature;  // Method
  BodyPtr body;         // Method
};

/// One class body for a template: the primary definition or a specialization.
struct ClassPattern {
  std::vector<std::string> params;  // template parameters introduced by this pattern
  bool variadic = false;            // last entry of `params` is a pack
  bool is_specialization = false;
  std::vector<TypeRef> spec_args;   // argument pattern of a specialization
  bool defined = false;             // false for a forward declaration
  bool is_struct = true;
  std::vector<MemberDecl> members;
  SourceSpan span;
};

struct TemplateInfo {
  std::vector<std::string> params;
  bool is_variadic = false;
  ClassPattern primary;                       // class templates only
  std::vector<ClassPattern> specializations;  // in declaration order
};

struct InstantiationInfo {
  EntityId origin = kNoEntity;
  std::vector<TypeRef> args;
  bool is_class = false;
};

struct Entity {
  EntityId id = kNoEntity;
  std::string name;
  std::string qualified_name;
  EntityKind kind = EntityKind::Namespace;
  EntityId parent = kNoEntity;
  std::vector<EntityId> children;

  std::optional<Signature> signature;  // functions, methods, function templates
  BodyPtr body;
  std::optional<TemplateInfo> template_info;
  std::optional<TypeRef> member_type;  // data members
  ExprPtr member_init;
  std::optional<InstantiationInfo> instantiation;
  bool is_struct = true;
  SourceSpan span;

  bool is_function_like() const {
    return kind == EntityKind::Function || kind == EntityKind::Method ||
           (kind == EntityKind::Instantiation && instantiation && !instantiation->is_class);
  }
  bool is_record() const {
    return kind == EntityKind::Class ||
           (kind == EntityKind::Instantiation && instantiation && instantiation->is_class);
  }
};

}  // namespace reflexbridge
