#include "reflexbridge/reflex.hpp"

namespace reflexbridge {

namespace {

struct KindName {
  ReflexKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ReflexKind::IS_NAMESPACE, "IS_NAMESPACE"}, {ReflexKind::IS_CLASS, "IS_CLASS"},
    {ReflexKind::IS_TEMPLATE, "IS_TEMPLATE"},   {ReflexKind::IS_FUNCTION, "IS_FUNCTION"},
    {ReflexKind::IS_METHOD, "IS_METHOD"},       {ReflexKind::IS_DATA_MEMBER, "IS_DATA_MEMBER"},
    {ReflexKind::TYPE, "TYPE"},                 {ReflexKind::RETURN_TYPE, "RETURN_TYPE"},
    {ReflexKind::ARG_TYPES, "ARG_TYPES"},       {ReflexKind::NUM_OVERLOADS, "NUM_OVERLOADS"},
    {ReflexKind::OVERLOAD_AT, "OVERLOAD_AT"},   {ReflexKind::CALLABLE_ID, "CALLABLE_ID"},
};

[[noreturn]] void mismatch(const Entity& e, ReflexKind kind) {
  throw Error(ErrorCode::KindMismatch, std::string(reflex_kind_name(kind)) + " is not defined for " +
                                           std::string(entity_kind_name(e.kind)) + " '" + e.qualified_name + "'");
}

bool is_method_set(const Engine& engine, const Entity& e) {
  return e.kind == EntityKind::OverloadSet && e.parent != kNoEntity && engine.entity(e.parent).is_record();
}

bool truth_of(const Engine& engine, const Entity& e, ReflexKind kind) {
  switch (kind) {
    case ReflexKind::IS_NAMESPACE: return e.kind == EntityKind::Namespace;
    case ReflexKind::IS_CLASS: return e.is_record();
    case ReflexKind::IS_TEMPLATE: return e.kind == EntityKind::ClassTemplate || e.kind == EntityKind::FunctionTemplate;
    case ReflexKind::IS_FUNCTION:
      return e.kind == EntityKind::Function || e.kind == EntityKind::FunctionTemplate ||
             (e.kind == EntityKind::OverloadSet && !is_method_set(engine, e)) ||
             (e.kind == EntityKind::Instantiation && !e.instantiation->is_class);
    case ReflexKind::IS_METHOD: return e.kind == EntityKind::Method || is_method_set(engine, e);
    case ReflexKind::IS_DATA_MEMBER: return e.kind == EntityKind::DataMember;
    default: return false;
  }
}

ReflexReply type_reply(const TypeRef& t, ReflexFormat format) {
  if (format == ReflexFormat::STRING) return Text{render_type(t)};
  return t;
}

}  // namespace

std::string_view reflex_kind_name(ReflexKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

std::string_view reflex_format_name(ReflexFormat format) {
  switch (format) {
    case ReflexFormat::STRING: return "STRING";
    case ReflexFormat::HANDLE: return "HANDLE";
    case ReflexFormat::OPTIMAL: return "OPTIMAL";
  }
  return "?";
}

std::optional<ReflexKind> parse_reflex_kind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::optional<ReflexFormat> parse_reflex_format(std::string_view name) {
  for (ReflexFormat f : kAllReflexFormats) {
    if (reflex_format_name(f) == name) return f;
  }
  return std::nullopt;
}

ReflexReply cpp_reflex(const Engine& engine, EntityId target, ReflexKind kind, ReflexFormat format,
                       std::size_t index) {
  const Entity& e = engine.entity(target);
  const bool text = format == ReflexFormat::STRING;
  switch (kind) {
    case ReflexKind::IS_NAMESPACE:
    case ReflexKind::IS_CLASS:
    case ReflexKind::IS_TEMPLATE:
    case ReflexKind::IS_FUNCTION:
    case ReflexKind::IS_METHOD:
    case ReflexKind::IS_DATA_MEMBER: {
      const bool v = truth_of(engine, e, kind);
      if (text) return Text{v ? "true" : "false"};
      return Truth{v};
    }
    case ReflexKind::TYPE:
      if (e.is_record()) return type_reply(engine.type_of(target), format);
      if (e.kind == EntityKind::DataMember) return type_reply(*e.member_type, format);
      mismatch(e, kind);
    case ReflexKind::RETURN_TYPE:
      if (!e.is_function_like()) mismatch(e, kind);
      return type_reply(e.signature->result, format);
    case ReflexKind::ARG_TYPES: {
      if (!e.is_function_like()) mismatch(e, kind);
      auto types = e.signature->param_types();
      if (text) return Text{render_types(types)};
      return TypeList{std::move(types)};
    }
    case ReflexKind::NUM_OVERLOADS: {
      std::uint64_t n = 0;
      if (e.kind == EntityKind::OverloadSet) {
        n = e.children.size();
      } else if (e.is_function_like() || e.kind == EntityKind::FunctionTemplate) {
        n = 1;
      } else {
        mismatch(e, kind);
      }
      if (text) return Text{std::to_string(n)};
      return Count{n};
    }
    case ReflexKind::OVERLOAD_AT: {
      EntityId chosen = kNoEntity;
      std::size_t size = 0;
      if (e.kind == EntityKind::OverloadSet) {
        size = e.children.size();
        if (index < size) chosen = e.children[index];
      } else if (e.is_function_like() || e.kind == EntityKind::FunctionTemplate) {
        size = 1;
        if (index == 0) chosen = target;
      } else {
        mismatch(e, kind);
      }
      if (chosen == kNoEntity) {
        throw Error(ErrorCode::IndexOutOfRange, "overload index " + std::to_string(index) + " out of range for '" +
                                                    e.qualified_name + "' with " + std::to_string(size) +
                                                    " overload(s)");
      }
      if (text) return Text{engine.entity(chosen).qualified_name};
      return EntityHandle{chosen};
    }
    case ReflexKind::CALLABLE_ID: {
      if (!e.is_function_like()) mismatch(e, kind);
      const std::uint64_t id = to_underlying(target);
      if (text) return Text{std::to_string(id)};
      return Callable{id};
    }
  }
  mismatch(e, kind);
}

std::vector<std::pair<std::string, EntityId>> list_members(const Engine& engine, EntityId target) {
  const Entity& e = engine.entity(target);
  if (e.kind != EntityKind::Namespace && !e.is_record()) {
    throw Error(ErrorCode::KindMismatch, "cannot list members of " + std::string(entity_kind_name(e.kind)) + " '" +
                                             e.qualified_name + "'");
  }
  std::vector<std::pair<std::string, EntityId>> out;
  out.reserve(e.children.size());
  for (EntityId c : e.children) out.emplace_back(engine.entity(c).name, c);
  return out;
}

std::string describe_reply(const Engine& engine, const ReflexReply& reply) {
  struct Visitor {
    const Engine& engine;
    std::string operator()(const Truth& t) const { return std::string("Truth(") + (t.value ? "true" : "false") + ")"; }
    std::string operator()(const Text& t) const { return "Text(\"" + t.value + "\")"; }
    std::string operator()(const TypeRef& t) const { return "Type(" + render_type(t) + ")"; }
    std::string operator()(const TypeList& t) const { return "TypeList(" + render_types(t.value) + ")"; }
    std::string operator()(const EntityHandle& h) const {
      return "EntityHandle(" + engine.entity(h.value).qualified_name + ")";
    }
    std::string operator()(const Count& c) const { return "Count(" + std::to_string(c.value) + ")"; }
    std::string operator()(const Callable& c) const {
      return "Callable(" + engine.entity(EntityId{static_cast<std::uint32_t>(c.value)}).qualified_name + ")";
    }
  };
  return std::visit(Visitor{engine}, reply);
}

}  // namespace reflexbridge
