// engine.hpp - one interop engine instance: entity table, instantiation cache,
// runtime counters, and per-module caches.
//
// An engine is confined to one thread at a time; nothing in it is locked.
#pragma once

#include <deque>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <typeindex>
#include <unordered_map>
#include <vector>

#include "reflexbridge/entity.hpp"

namespace reflexbridge {

struct InstantiationStats {
  std::uint64_t total_instantiations = 0;
  std::uint64_t cache_hits = 0;
  std::map<EntityId, std::uint64_t> per_template;
  std::uint64_t node_count = 0;
  std::vector<std::string> order_log;
};

/// Instrumentation for the boxed path and user-code execution on either path.
struct RuntimeCounters {
  std::uint64_t resolutions = 0;
  std::uint64_t boxings = 0;
  std::uint64_t unboxings = 0;
  std::uint64_t invocations = 0;
};

class Engine {
 public:
  Engine();
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const Entity& entity(EntityId id) const;
  Entity& entity_mut(EntityId id);
  std::size_t entity_count() const { return entities_.size(); }
  /// All ids in creation order.
  std::vector<EntityId> all_entities() const;
  const std::vector<EntityId>& top_level() const { return top_level_; }

  /// Registers `e` under its qualified name and returns its new id.
  /// Throws Redefinition if the qualified name is taken.
  EntityId add_entity(Entity e);
  void add_child(EntityId parent, EntityId child);

  std::optional<EntityId> find(std::string_view qualified_name) const;
  /// Throws NotFound.
  const Entity& lookup(std::string_view qualified_name) const;

  /// Type of a class or class instantiation entity.
  TypeRef type_of(EntityId record) const;
  /// Binds class and template names in `t` to entity ids. Throws NotFound.
  TypeRef resolve_type(const TypeRef& t) const;

  /// Data members of a record in slot order.
  std::vector<EntityId> data_members(EntityId record) const;
  std::optional<EntityId> find_child(EntityId scope, std::string_view name) const;

  // Instantiation memo table, keyed by canonical instantiation spelling.
  std::optional<EntityId> find_instantiation(const TypeRef& inst) const;
  std::optional<EntityId> find_instantiation(const std::string& key) const;
  void record_instantiation(const std::string& key, EntityId id);
  InstantiationStats& stats() { return stats_; }
  const InstantiationStats& stats() const { return stats_; }
  RuntimeCounters& counters() { return counters_; }
  const RuntimeCounters& counters() const { return counters_; }

  /// Per-engine state owned by other modules, created on first use.
  template <class T>
  T& extension() {
    auto& slot = extensions_[std::type_index(typeid(T))];
    if (!slot) slot = std::make_shared<T>();
    return *static_cast<T*>(slot.get());
  }

 private:
  std::deque<Entity> entities_;
  std::unordered_map<std::string, EntityId> by_name_;
  std::vector<EntityId> top_level_;
  std::unordered_map<std::string, EntityId> instantiations_;
  InstantiationStats stats_;
  RuntimeCounters counters_;
  std::unordered_map<std::type_index, std::shared_ptr<void>> extensions_;
};

}  // namespace reflexbridge
