#include "reflexbridge/engine.hpp"

#include "reflexbridge/error.hpp"

namespace reflexbridge {

std::string_view entity_kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::Namespace: return "Namespace";
    case EntityKind::Class: return "Class";
    case EntityKind::ClassTemplate: return "ClassTemplate";
    case EntityKind::FunctionTemplate: return "FunctionTemplate";
    case EntityKind::OverloadSet: return "OverloadSet";
    case EntityKind::Function: return "Function";
    case EntityKind::Method: return "Method";
    case EntityKind::DataMember: return "DataMember";
    case EntityKind::Instantiation: return "Instantiation";
  }
  return "?";
}

std::vector<TypeRef> Signature::param_types() const {
  std::vector<TypeRef> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.type);
  return out;
}

Engine::Engine() = default;
Engine::~Engine() = default;

const Entity& Engine::entity(EntityId id) const {
  const auto idx = to_underlying(id);
  if (idx == 0 || idx > entities_.size()) {
    throw Error(ErrorCode::NotFound, "no entity with id " + std::to_string(idx));
  }
  return entities_[idx - 1];
}

Entity& Engine::entity_mut(EntityId id) { return const_cast<Entity&>(std::as_const(*this).entity(id)); }

std::vector<EntityId> Engine::all_entities() const {
  std::vector<EntityId> ids;
  ids.reserve(entities_.size());
  for (std::uint32_t i = 1; i <= entities_.size(); ++i) ids.push_back(EntityId{i});
  return ids;
}

EntityId Engine::add_entity(Entity e) {
  if (by_name_.count(e.qualified_name)) {
    throw Error(ErrorCode::Redefinition, "redefinition of '" + e.qualified_name + "'", e.span);
  }
  const EntityId id{static_cast<std::uint32_t>(entities_.size() + 1)};
  e.id = id;
  by_name_.emplace(e.qualified_name, id);
  if (e.parent == kNoEntity && e.kind != EntityKind::Instantiation) top_level_.push_back(id);
  entities_.push_back(std::move(e));
  return id;
}

void Engine::add_child(EntityId parent, EntityId child) { entity_mut(parent).children.push_back(child); }

std::optional<EntityId> Engine::find(std::string_view qualified_name) const {
  auto it = by_name_.find(std::string(qualified_name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

const Entity& Engine::lookup(std::string_view qualified_name) const {
  auto id = find(qualified_name);
  if (!id) throw Error(ErrorCode::NotFound, "'" + std::string(qualified_name) + "' not found");
  return entity(*id);
}

TypeRef Engine::type_of(EntityId record) const {
  const Entity& e = entity(record);
  if (e.kind == EntityKind::Class) return TypeRef::class_type(e.id, e.qualified_name);
  if (e.is_record()) {
    const Entity& tmpl = entity(e.instantiation->origin);
    return TypeRef::instantiation(tmpl.id, tmpl.qualified_name, e.instantiation->args);
  }
  throw Error(ErrorCode::KindMismatch, "'" + e.qualified_name + "' is not a class");
}

TypeRef Engine::resolve_type(const TypeRef& t) const {
  switch (t.kind()) {
    case TypeKind::Class: {
      if (t.entity() != kNoEntity) return t;
      const Entity& e = lookup(t.name());
      if (e.kind != EntityKind::Class) {
        throw Error(ErrorCode::NotFound, "'" + t.name() + "' does not name a class");
      }
      return TypeRef::class_type(e.id, e.qualified_name);
    }
    case TypeKind::Instantiation: {
      std::vector<TypeRef> args;
      args.reserve(t.args().size());
      for (const auto& a : t.args()) args.push_back(resolve_type(a));
      EntityId tmpl = t.entity();
      std::string name = t.name();
      if (tmpl == kNoEntity) {
        const Entity& e = lookup(t.name());
        if (e.kind != EntityKind::ClassTemplate) {
          throw Error(ErrorCode::NotFound, "'" + t.name() + "' does not name a class template");
        }
        tmpl = e.id;
        name = e.qualified_name;
      }
      return TypeRef::instantiation(tmpl, name, std::move(args));
    }
    case TypeKind::Array2D:
      return TypeRef::array2d(resolve_type(t.element()));
    default:
      return t;
  }
}

std::vector<EntityId> Engine::data_members(EntityId record) const {
  std::vector<EntityId> out;
  for (EntityId c : entity(record).children) {
    if (entity(c).kind == EntityKind::DataMember) out.push_back(c);
  }
  return out;
}

std::optional<EntityId> Engine::find_child(EntityId scope, std::string_view name) const {
  for (EntityId c : entity(scope).children) {
    if (entity(c).name == name) return c;
  }
  return std::nullopt;
}

std::optional<EntityId> Engine::find_instantiation(const TypeRef& inst) const {
  return find_instantiation(render_type(inst));
}

std::optional<EntityId> Engine::find_instantiation(const std::string& key) const {
  auto it = instantiations_.find(key);
  if (it == instantiations_.end()) return std::nullopt;
  return it->second;
}

void Engine::record_instantiation(const std::string& key, EntityId id) { instantiations_[key] = id; }

}  // namespace reflexbridge
