// acceptance - one PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

#include "reflexbridge/bench.hpp"
#include "support.hpp"

using namespace rbtest;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Outcome differential() {
  Outcome out;
  const auto t0 = Clock::now();
  Engine engine;
  load_corpus(engine);
  const auto kernels = parse_kernels(table1_kernels());
  int compared = 0;
  for (const auto& c : bench_cases()) {
    const KernelAST& k = kernel_named(kernels, c.kernel);
    const LoadedKernel loaded(engine, lower(engine, type_kernel(engine, k, {array_type()})));
    for (std::size_t n : {1, 7, 100}) {
      for (const std::string fill : {"zeros", "ones", "random"}) {
        const ArrayPtr a = make_array(fill, n, 42);
        const Scalar typed = std::get<Scalar>(loaded.run({a}));
        const Scalar boxed = run_boxed(engine, k, {a});
        ++compared;
        if (!agree(typed, boxed)) {
          out.fail(c.kernel + " " + fill + " " + std::to_string(n) + ": typed " + format_scalar(typed) + ", boxed " +
                   format_scalar(boxed));
        }
      }
    }
  }
  const double secs = elapsed(t0);
  if (secs >= 30) out.fail("took " + fixed(secs) + " s (limit 30 s)");
  if (out.pass) out.detail = std::to_string(compared) + " comparisons in " + fixed(secs, 3) + " s";
  return out;
}

Outcome speedup_shape() {
  Outcome out;
  const auto t0 = Clock::now();
  std::vector<BenchRow> rows;
  for (const auto& c : bench_cases()) rows.push_back(bench_case(c.name, 100, 3000));
  std::string summary;
  for (const auto& r : rows) {
    summary += (summary.empty() ? "" : ", ") + r.case_name + " " + fixed(r.speedup) + "x";
    if (r.speedup < 2.0) out.fail(r.case_name + " speedup " + fixed(r.speedup) + "x < 2.0x");
  }
  std::vector<double> speedups;
  for (const auto& r : rows) speedups.push_back(r.speedup);
  std::sort(speedups.rbegin(), speedups.rend());
  const auto templated = std::find_if(rows.begin(), rows.end(), [](const BenchRow& r) {
    return r.case_name == "templated-fns";
  });
  if (templated == rows.end() || templated->speedup < speedups[1]) {
    out.fail("templated-fns is not in the top two: " + summary);
  }
  const double secs = elapsed(t0);
  if (secs >= 120) out.fail("took " + fixed(secs) + " s (limit 120 s)");
  if (out.pass) out.detail = summary;
  return out;
}

std::vector<std::string> expected_log(ScalingMode mode, std::uint64_t n) {
  std::vector<std::string> log;
  if (mode == ScalingMode::TupleArity) {
    for (std::uint64_t k = 0; k <= n; ++k) {
      std::string name = "Tuple<";
      for (std::uint64_t i = 0; i < k; ++i) name += i ? ", f64" : "f64";
      log.push_back(name + ">");
    }
  } else {
    std::string inner = "f64";
    for (std::uint64_t d = 0; d < n; ++d) log.push_back(inner = "Vec<" + inner + ">");
  }
  return log;
}

Outcome instantiation_counting() {
  Outcome out;
  const auto t0 = Clock::now();
  for (const auto& [mode, n_max] : {std::pair{ScalingMode::TupleArity, 64}, std::pair{ScalingMode::VectorDepth, 128}}) {
    for (std::uint64_t n = 1; n <= static_cast<std::uint64_t>(n_max); ++n) {
      Engine engine;
      parse_translation_unit(engine, template_decls());
      const TypeRef type = parse_type(scaling_type(mode, n), engine);
      instantiate(engine, type.entity(), type.args());
      const InstantiationStats cold = engine.stats();
      const std::uint64_t want = mode == ScalingMode::TupleArity ? n + 1 : n;
      const std::string label = std::string(scaling_mode_name(mode)) + " " + std::to_string(n);
      if (cold.total_instantiations != want) {
        out.fail(label + ": " + std::to_string(cold.total_instantiations) + " instantiations, expected " +
                 std::to_string(want));
      }
      if (cold.order_log != expected_log(mode, n)) out.fail(label + ": order_log is not innermost first");
      // Warm reruns: nothing new, one cache hit each.
      for (int rerun = 1; rerun <= 2; ++rerun) {
        instantiate(engine, type.entity(), type.args());
        if (engine.stats().total_instantiations != cold.total_instantiations) {
          out.fail(label + ": warm rerun instantiated again");
        }
        if (engine.stats().cache_hits != cold.cache_hits + static_cast<std::uint64_t>(rerun)) {
          out.fail(label + ": warm rerun " + std::to_string(rerun) + " cache_hits " +
                   std::to_string(engine.stats().cache_hits) + ", expected " +
                   std::to_string(cold.cache_hits + rerun));
        }
      }
    }
  }
  const double secs = elapsed(t0);
  if (secs >= 60) out.fail("took " + fixed(secs) + " s (limit 60 s)");
  if (out.pass) out.detail = "tuple 1..64, vector 1..128 in " + fixed(secs) + " s";
  return out;
}

Outcome typing_purity() {
  Outcome out;
  Engine engine;
  load_corpus(engine);
  std::vector<KernelAST> kernels = parse_kernels(table1_kernels());
  for (auto& k : extra_kernels()) kernels.push_back(std::move(k));
  for (const auto& k : kernels) {
    std::vector<TypeRef> params;
    for (const auto& p : k.params) params.push_back(*p.type);
    type_kernel(engine, k, params);
  }
  const RuntimeCounters& c = engine.counters();
  if (c.invocations != 0) out.fail(std::to_string(c.invocations) + " user-function invocations during typing");
  if (out.pass) out.detail = std::to_string(kernels.size()) + " kernels typed, 0 invocations";
  return out;
}

Outcome reflection_contract() {
  Outcome out;
  std::string diff;
  const std::string sweep = reflection_sweep();
  if (!matches_golden("reflex/sweep.txt", sweep, diff)) out.fail("golden mismatch: " + diff);
  Engine engine;
  load_corpus(engine);
  for (const auto& k : parse_kernels(table1_kernels())) type_kernel(engine, k, {array_type()});
  int checked = 0;
  for (EntityId id : engine.all_entities()) {
    for (ReflexKind kind : kAllReflexKinds) {
      for (std::size_t index : reflex_indices(kind)) {
        ReflexReply handle, text;
        try {
          handle = cpp_reflex(engine, id, kind, ReflexFormat::HANDLE, index);
          text = cpp_reflex(engine, id, kind, ReflexFormat::STRING, index);
        } catch (const Error&) {
          continue;
        }
        const auto* s = std::get_if<Text>(&text);
        std::string rendered;
        if (const auto* t = std::get_if<TypeRef>(&handle)) rendered = render_type(*t);
        else if (const auto* l = std::get_if<TypeList>(&handle)) rendered = render_types(l->value);
        else continue;
        ++checked;
        if (!s || s->value != rendered) {
          out.fail(engine.entity(id).qualified_name + " " + std::string(reflex_kind_name(kind)) +
                   ": STRING and HANDLE disagree");
        }
      }
    }
  }
  if (out.pass) {
    out.detail = std::to_string(std::count(sweep.begin(), sweep.end(), '\n')) + " golden lines, " +
                 std::to_string(checked) + " type-valued replies coherent";
  }
  return out;
}

Outcome overload_oracle() {
  Outcome out;
  Engine engine;
  load_corpus(engine);
  int checked = 0;
  int sets = 0;
  for (EntityId target : callable_targets(engine)) {
    sets += engine.entity(target).kind == EntityKind::OverloadSet;
    for (const auto& args : arg_tuples(2)) {
      std::string why;
      ++checked;
      if (!overload_agrees(engine, target, args, why)) out.fail(why);
    }
  }
  if (sets == 0) out.fail("no overload sets in the corpus");
  if (out.pass) {
    out.detail = std::to_string(checked) + " calls over " + std::to_string(sets) + " overload sets and " +
                 std::to_string(callable_targets(engine).size() - sets) + " lone callables";
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"differential-correctness", differential},
      {"speedup-shape", speedup_shape},
      {"instantiation-counting", instantiation_counting},
      {"typing-purity", typing_purity},
      {"reflection-contract", reflection_contract},
      {"overload-resolution-oracle", overload_oracle},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(std::string("threw: ") + e.what());
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
