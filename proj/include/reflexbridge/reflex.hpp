// reflex.hpp - request/reply reflection over bound entities.
//
// Reply payload by kind and format:
//
//   kind             STRING                 HANDLE / OPTIMAL
//   IS_*             Text "true"/"false"    Truth
//   TYPE             Text (rendered)        Type
//   RETURN_TYPE      Text (rendered)        Type
//   ARG_TYPES        Text "a, b"            TypeList
//   NUM_OVERLOADS    Text (decimal)         Count
//   OVERLOAD_AT(i)   Text (qualified name)  EntityHandle
//   CALLABLE_ID      Text (decimal)         Callable
//
// Reflection is read-only: it never instantiates templates or touches the
// engine's counters.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "reflexbridge/engine.hpp"

namespace reflexbridge {

enum class ReflexKind : std::uint8_t {
  IS_NAMESPACE,
  IS_CLASS,
  IS_TEMPLATE,
  IS_FUNCTION,
  IS_METHOD,
  IS_DATA_MEMBER,
  TYPE,
  RETURN_TYPE,
  ARG_TYPES,
  NUM_OVERLOADS,
  OVERLOAD_AT,
  CALLABLE_ID,
};

enum class ReflexFormat : std::uint8_t { STRING, HANDLE, OPTIMAL };

inline constexpr ReflexKind kAllReflexKinds[] = {
    ReflexKind::IS_NAMESPACE, ReflexKind::IS_CLASS,    ReflexKind::IS_TEMPLATE,   ReflexKind::IS_FUNCTION,
    ReflexKind::IS_METHOD,    ReflexKind::IS_DATA_MEMBER, ReflexKind::TYPE,       ReflexKind::RETURN_TYPE,
    ReflexKind::ARG_TYPES,    ReflexKind::NUM_OVERLOADS, ReflexKind::OVERLOAD_AT, ReflexKind::CALLABLE_ID,
};

inline constexpr ReflexFormat kAllReflexFormats[] = {ReflexFormat::STRING, ReflexFormat::HANDLE,
                                                     ReflexFormat::OPTIMAL};

std::string_view reflex_kind_name(ReflexKind kind);
std::string_view reflex_format_name(ReflexFormat format);
std::optional<ReflexKind> parse_reflex_kind(std::string_view name);
std::optional<ReflexFormat> parse_reflex_format(std::string_view name);

struct Truth {
  bool value = false;
  friend bool operator==(const Truth&, const Truth&) = default;
};
struct Text {
  std::string value;
  friend bool operator==(const Text&, const Text&) = default;
};
struct TypeList {
  std::vector<TypeRef> value;
  friend bool operator==(const TypeList&, const TypeList&) = default;
};
struct EntityHandle {
  EntityId value = kNoEntity;
  friend bool operator==(const EntityHandle&, const EntityHandle&) = default;
};
struct Count {
  std::uint64_t value = 0;
  friend bool operator==(const Count&, const Count&) = default;
};
struct Callable {
  std::uint64_t value = 0;
  friend bool operator==(const Callable&, const Callable&) = default;
};

using ReflexReply = std::variant<Truth, Text, TypeRef, TypeList, EntityHandle, Count, Callable>;

/// `index` is used by OVERLOAD_AT only. Throws KindMismatch when the kind
/// is meaningless for the entity, IndexOutOfRange for a bad overload index.
ReflexReply cpp_reflex(const Engine& engine, EntityId target, ReflexKind kind, ReflexFormat format,
                       std::size_t index = 0);

/// Children of a namespace, class or class instantiation in declaration order.
std::vector<std::pair<std::string, EntityId>> list_members(const Engine& engine, EntityId target);

/// One-line rendering of a reply: `Truth(true)`, `Text("S")`, `Type(f64)`, ...
std::string describe_reply(const Engine& engine, const ReflexReply& reply);

}  // namespace reflexbridge
