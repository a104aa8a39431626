#include <doctest.h>

#include "support.hpp"

using namespace rbtest;

namespace {

struct Corpus {
  Engine engine;
  Corpus() { load_corpus(engine); }
  EntityId id(const std::string& name) { return engine.lookup(name).id; }
  ReflexReply ask(const std::string& name, ReflexKind kind, ReflexFormat format, std::size_t index = 0) {
    return cpp_reflex(engine, id(name), kind, format, index);
  }
  ErrorCode fails(const std::string& name, ReflexKind kind, ReflexFormat format, std::size_t index = 0) {
    try {
      ask(name, kind, format, index);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("expected a reflection error");
    return ErrorCode::BadRequest;
  }
};

}  // namespace

TEST_CASE("boolean kinds") {
  Corpus c;
  CHECK(c.ask("add42", ReflexKind::IS_TEMPLATE, ReflexFormat::STRING) == ReflexReply{Text{"true"}});
  CHECK(c.ask("add42", ReflexKind::IS_TEMPLATE, ReflexFormat::HANDLE) == ReflexReply{Truth{true}});
  CHECK(c.ask("add42", ReflexKind::IS_TEMPLATE, ReflexFormat::OPTIMAL) == ReflexReply{Truth{true}});
  CHECK(c.ask("S", ReflexKind::IS_CLASS, ReflexFormat::OPTIMAL) == ReflexReply{Truth{true}});
  CHECK(c.ask("S", ReflexKind::IS_NAMESPACE, ReflexFormat::STRING) == ReflexReply{Text{"false"}});
  CHECK(c.ask("geo", ReflexKind::IS_NAMESPACE, ReflexFormat::HANDLE) == ReflexReply{Truth{true}});
  CHECK(c.ask("S::x", ReflexKind::IS_DATA_MEMBER, ReflexFormat::HANDLE) == ReflexReply{Truth{true}});
  CHECK(c.ask("S::get", ReflexKind::IS_METHOD, ReflexFormat::HANDLE) == ReflexReply{Truth{true}});
  CHECK(c.ask("answer", ReflexKind::IS_FUNCTION, ReflexFormat::HANDLE) == ReflexReply{Truth{true}});
}

TEST_CASE("type-valued kinds") {
  Corpus c;
  CHECK(c.ask("S", ReflexKind::TYPE, ReflexFormat::STRING) == ReflexReply{Text{"S"}});
  CHECK(c.ask("S", ReflexKind::TYPE, ReflexFormat::HANDLE) == ReflexReply{c.engine.type_of(c.id("S"))});
  CHECK(c.ask("S::x", ReflexKind::TYPE, ReflexFormat::OPTIMAL) == ReflexReply{TypeRef::f64()});
  CHECK(c.ask("answer", ReflexKind::RETURN_TYPE, ReflexFormat::STRING) == ReflexReply{Text{"f64"}});
  CHECK(c.ask("geo::dot", ReflexKind::ARG_TYPES, ReflexFormat::STRING) == ReflexReply{Text{"f64, f64"}});
  CHECK(c.ask("geo::dot", ReflexKind::ARG_TYPES, ReflexFormat::HANDLE) ==
        ReflexReply{TypeList{{TypeRef::f64(), TypeRef::f64()}}});
}

TEST_CASE("overload kinds") {
  Corpus c;
  CHECK(c.ask("f2", ReflexKind::NUM_OVERLOADS, ReflexFormat::OPTIMAL) == ReflexReply{Count{2}});
  CHECK(c.ask("mix", ReflexKind::NUM_OVERLOADS, ReflexFormat::HANDLE) == ReflexReply{Count{3}});
  const Entity& f2 = c.engine.lookup("f2");
  CHECK(c.ask("f2", ReflexKind::OVERLOAD_AT, ReflexFormat::HANDLE, 1) == ReflexReply{EntityHandle{f2.children[1]}});
  CHECK(c.fails("f2", ReflexKind::OVERLOAD_AT, ReflexFormat::HANDLE, 2) == ErrorCode::IndexOutOfRange);
  CHECK(c.ask("answer", ReflexKind::CALLABLE_ID, ReflexFormat::HANDLE) ==
        ReflexReply{Callable{to_underlying(c.id("answer"))}});
}

TEST_CASE("meaningless pairs are kind mismatches") {
  Corpus c;
  CHECK(c.fails("add42", ReflexKind::RETURN_TYPE, ReflexFormat::HANDLE) == ErrorCode::KindMismatch);
  CHECK(c.fails("add42", ReflexKind::CALLABLE_ID, ReflexFormat::HANDLE) == ErrorCode::KindMismatch);
  CHECK(c.fails("geo", ReflexKind::TYPE, ReflexFormat::STRING) == ErrorCode::KindMismatch);
  CHECK(c.fails("S", ReflexKind::ARG_TYPES, ReflexFormat::STRING) == ErrorCode::KindMismatch);
}

TEST_CASE("list_members in declaration order") {
  Corpus c;
  auto names = [&](const std::string& target) {
    std::vector<std::string> out;
    for (const auto& [name, id] : list_members(c.engine, c.id(target))) {
      out.push_back(name);
      CHECK(c.engine.entity(id).name == name);
    }
    return out;
  };
  CHECK(names("S") == std::vector<std::string>{"x", "get", "scale"});
  CHECK(names("empty").empty());
  CHECK(names("geo") == std::vector<std::string>{"Point", "dot"});
  const EntityId tuple = require_record(c.engine, parse_type("Tuple<f64>", c.engine));
  std::vector<std::string> members;
  for (const auto& [name, id] : list_members(c.engine, tuple)) members.push_back(name);
  CHECK(members == std::vector<std::string>{"head", "tail", "size"});
  CHECK_THROWS_AS(list_members(c.engine, c.id("add42")), Error);
}

TEST_CASE("golden sweep of every kind and format") {
  std::string diff;
  CHECK_MESSAGE(matches_golden("reflex/sweep.txt", reflection_sweep(), diff), diff);
}

TEST_CASE("property: STRING and HANDLE replies agree on every type-valued reply") {
  Engine engine;
  load_corpus(engine);
  for (const auto& k : parse_kernels(table1_kernels())) type_kernel(engine, k, {array_type()});
  int checked = 0;
  for (EntityId id : engine.all_entities()) {
    for (ReflexKind kind : kAllReflexKinds) {
      for (std::size_t index : reflex_indices(kind)) {
        ReflexReply handle, optimal, text;
        try {
          handle = cpp_reflex(engine, id, kind, ReflexFormat::HANDLE, index);
          optimal = cpp_reflex(engine, id, kind, ReflexFormat::OPTIMAL, index);
          text = cpp_reflex(engine, id, kind, ReflexFormat::STRING, index);
        } catch (const Error&) {
          continue;
        }
        CHECK(handle == optimal);
        REQUIRE(std::holds_alternative<Text>(text));
        const std::string& s = std::get<Text>(text).value;
        if (const auto* t = std::get_if<TypeRef>(&handle)) {
          CHECK(render_type(*t) == s);
          ++checked;
        } else if (const auto* l = std::get_if<TypeList>(&handle)) {
          CHECK(render_types(l->value) == s);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("property: a full sweep mutates nothing") {
  Engine engine;
  load_corpus(engine);
  for (const auto& k : parse_kernels(table1_kernels())) type_kernel(engine, k, {array_type()});
  const std::size_t entities = engine.entity_count();
  const InstantiationStats before = engine.stats();
  const RuntimeCounters counters = engine.counters();
  sweep_entities(engine, engine.all_entities());
  CHECK(engine.entity_count() == entities);
  CHECK(engine.stats().total_instantiations == before.total_instantiations);
  CHECK(engine.stats().cache_hits == before.cache_hits);
  CHECK(engine.stats().node_count == before.node_count);
  CHECK(engine.stats().order_log == before.order_log);
  CHECK(engine.counters().resolutions == counters.resolutions);
  CHECK(engine.counters().invocations == counters.invocations);
}

TEST_CASE("property: every entity kind and reflection kind pair replies or mismatches") {
  // sweep_entities rethrows anything other than KindMismatch / IndexOutOfRange.
  CHECK_NOTHROW(reflection_sweep());
}
