// support.hpp - corpus loading and independent oracles shared by the tests.
//
// The oracles here are written from the rules directly and deliberately do
// not call into the library's conversion or evaluation code.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reflexbridge/dyn_runtime.hpp"
#include "reflexbridge/engine.hpp"
#include "reflexbridge/executor.hpp"
#include "reflexbridge/fixtures.hpp"
#include "reflexbridge/lowerer.hpp"
#include "reflexbridge/parser.hpp"
#include "reflexbridge/specializer.hpp"

#ifndef RB_SOURCE_DIR
#error "RB_SOURCE_DIR must point at the repository root"
#endif

namespace rbtest {

using namespace reflexbridge;

inline std::string source_path(const std::string& rel) { return std::string(RB_SOURCE_DIR) + "/" + rel; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Set RB_UPDATE_GOLDEN=1 to rewrite golden files instead of comparing.
inline bool update_golden() {
  const char* v = std::getenv("RB_UPDATE_GOLDEN");
  return v && std::string(v) == "1";
}

/// Every declaration file of the corpus, in load order.
inline std::vector<std::string> corpus_decls() {
  return {std::string(table1_decls()), std::string(template_decls()), std::string(misc_decls())};
}

inline void load_corpus(Engine& engine) {
  for (const auto& src : corpus_decls()) parse_translation_unit(engine, src);
}

inline std::vector<KernelAST> extra_kernels() { return parse_kernels(read_text(source_path("tests/corpus/extra.krn"))); }

inline const KernelAST& kernel_named(const std::vector<KernelAST>& ks, const std::string& name) {
  for (const auto& k : ks) {
    if (k.name == name) return k;
  }
  throw std::runtime_error("no kernel " + name);
}

inline ArrayPtr make_array(const std::string& fill, std::size_t n, std::uint64_t seed = 7) {
  if (fill == "zeros") return std::make_shared<const Array2D>(Array2D::zeros(n, n));
  if (fill == "ones") return std::make_shared<const Array2D>(Array2D::ones(n, n));
  return std::make_shared<const Array2D>(Array2D::random(n, n, seed));
}

inline TypeRef array_type() { return TypeRef::array2d(TypeRef::f64()); }

/// Typed-path result for a kernel with array-only parameters.
inline Scalar run_typed(Engine& engine, const KernelAST& k, const std::vector<NativeValue>& args) {
  std::vector<TypeRef> types;
  for (const auto& a : args) {
    types.push_back(std::holds_alternative<Scalar>(a) ? scalar_type(std::get<Scalar>(a)) : array_type());
  }
  return std::get<Scalar>(execute(engine, lower(engine, type_kernel(engine, k, types)), args));
}

inline Scalar run_boxed(Engine& engine, const KernelAST& k, const std::vector<NativeValue>& args) {
  std::vector<BoxedValue> boxed;
  for (const auto& a : args) boxed.push_back(box(a));
  return run_kernel_dynamic(engine, k, boxed).scalar();
}

// -- flat-loop oracles for the five benchmark kernels -------------------------

inline double oracle_case(const std::string& kernel, const Array2D& a) {
  const std::size_t n = a.rows();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a.data()[i * a.cols() + i];
    double term = 0.0;
    if (kernel == "fn_no_args") {
      term = d + 42.0;
    } else if (kernel == "overloaded_fns") {
      const auto as_int = static_cast<std::int32_t>(std::trunc(d));
      term = (d + 42.0) + static_cast<double>(as_int + 42);
    } else if (kernel == "templated_fns") {
      const auto as_long = static_cast<std::int64_t>(std::trunc(d));
      term = (d + 42.0) + static_cast<double>(as_long + 42);
    } else if (kernel == "data_members") {
      term = d + 1.5;
    } else if (kernel == "methods") {
      term = d * 1.5 + 1.5;
    } else {
      throw std::runtime_error("no oracle for " + kernel);
    }
    trace += term;
  }
  return trace;
}

inline bool agree(const Scalar& a, const Scalar& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](auto x) {
        using T = decltype(x);
        const T y = std::get<T>(b);
        if constexpr (std::is_floating_point_v<T>) {
          if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
          if (x == y) return true;
          return std::fabs(double(x) - double(y)) <= 1e-12 * std::max(std::fabs(double(x)), std::fabs(double(y)));
        } else {
          return x == y;
        }
      },
      a);
}

// -- brute-force overload ranker ---------------------------------------------

enum class Builtin { Void, Bool, I32, I64, F32, F64 };

inline const std::vector<Builtin>& all_builtins() {
  static const std::vector<Builtin> v = {Builtin::Void, Builtin::Bool, Builtin::I32,
                                         Builtin::I64,  Builtin::F32,  Builtin::F64};
  return v;
}

inline TypeRef to_type(Builtin b) {
  switch (b) {
    case Builtin::Void: return TypeRef::void_();
    case Builtin::Bool: return TypeRef::bool_();
    case Builtin::I32: return TypeRef::i32();
    case Builtin::I64: return TypeRef::i64();
    case Builtin::F32: return TypeRef::f32();
    case Builtin::F64: return TypeRef::f64();
  }
  return TypeRef::void_();
}

inline std::optional<Builtin> from_type(const TypeRef& t) {
  switch (t.kind()) {
    case TypeKind::Void: return Builtin::Void;
    case TypeKind::Bool: return Builtin::Bool;
    case TypeKind::I32: return Builtin::I32;
    case TypeKind::I64: return Builtin::I64;
    case TypeKind::F32: return Builtin::F32;
    case TypeKind::F64: return Builtin::F64;
    default: return std::nullopt;
  }
}

// R0 exact, R1 i32->i64, R2 f32->f64, R3 int->float, R4 bool->int.
inline std::optional<int> table_rank(Builtin from, Builtin to) {
  const bool from_int = from == Builtin::I32 || from == Builtin::I64;
  const bool to_int = to == Builtin::I32 || to == Builtin::I64;
  const bool to_float = to == Builtin::F32 || to == Builtin::F64;
  if (from == to) return from == Builtin::Void ? std::nullopt : std::optional<int>(0);
  if (from == Builtin::I32 && to == Builtin::I64) return 1;
  if (from == Builtin::F32 && to == Builtin::F64) return 2;
  if (from_int && to_float) return 3;
  if (from == Builtin::Bool && to_int) return 4;
  return std::nullopt;
}

struct OracleOutcome {
  enum Kind { Chosen, NoViable, Ambiguous } kind = NoViable;
  EntityId candidate = kNoEntity;  // function, or the template for a deduced match
};

/// Resolves a call to the overload set (or lone function/template) `target`
/// from the R0-R4 table alone. Templates bind their single parameter T
/// exactly from arguments in `T` positions; other positions convert.
inline OracleOutcome brute_force_resolve(const Engine& engine, EntityId target, const std::vector<Builtin>& args) {
  const Entity& t = engine.entity(target);
  std::vector<EntityId> members =
      t.kind == EntityKind::OverloadSet ? t.children : std::vector<EntityId>{target};
  std::vector<std::pair<int, EntityId>> viable;
  for (EntityId m : members) {
    const Entity& c = engine.entity(m);
    const auto& params = c.signature->params;
    if (params.size() != args.size()) continue;
    std::optional<Builtin> bound;
    bool ok = true;
    int worst = 0;
    for (std::size_t i = 0; i < params.size() && ok; ++i) {
      const TypeRef& p = params[i].type;
      if (c.kind == EntityKind::FunctionTemplate && p.kind() == TypeKind::TemplateParam) {
        if (args[i] == Builtin::Void || (bound && *bound != args[i])) ok = false;
        bound = args[i];
        continue;
      }
      const auto want = from_type(p);
      const auto r = want ? table_rank(args[i], *want) : std::nullopt;
      if (!r) ok = false;
      else worst = std::max(worst, *r);
    }
    if (c.kind == EntityKind::FunctionTemplate && !bound) ok = false;
    if (ok) viable.emplace_back(worst, m);
  }
  OracleOutcome out;
  if (viable.empty()) return out;
  int best = viable.front().first;
  for (const auto& v : viable) best = std::min(best, v.first);
  int at_best = 0;
  for (const auto& v : viable) {
    if (v.first == best) {
      ++at_best;
      out.candidate = v.second;
    }
  }
  out.kind = at_best == 1 ? OracleOutcome::Chosen : OracleOutcome::Ambiguous;
  return out;
}

/// Every overload set plus every lone function and function template in the
/// engine that is not a method.
inline std::vector<EntityId> callable_targets(const Engine& engine) {
  std::vector<EntityId> out;
  for (EntityId id : engine.all_entities()) {
    const Entity& e = engine.entity(id);
    if (owning_record(engine, id) != kNoEntity) continue;
    if (e.parent != kNoEntity && engine.entity(e.parent).kind == EntityKind::OverloadSet) continue;
    if (e.kind == EntityKind::OverloadSet || e.kind == EntityKind::Function || e.kind == EntityKind::FunctionTemplate) {
      out.push_back(id);
    }
  }
  return out;
}

/// All argument tuples over the six builtins up to `max_arity`.
inline std::vector<std::vector<Builtin>> arg_tuples(std::size_t max_arity) {
  std::vector<std::vector<Builtin>> out{{}};
  std::vector<std::vector<Builtin>> layer{{}};
  for (std::size_t n = 1; n <= max_arity; ++n) {
    std::vector<std::vector<Builtin>> next;
    for (const auto& prefix : layer) {
      for (Builtin b : all_builtins()) {
        auto t = prefix;
        t.push_back(b);
        next.push_back(t);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

/// True when the library's choice agrees with the oracle; `why` explains a miss.
inline bool overload_agrees(Engine& engine, EntityId target, const std::vector<Builtin>& args, std::string& why) {
  std::vector<TypeRef> types;
  for (Builtin b : args) types.push_back(to_type(b));
  const OracleOutcome expect = brute_force_resolve(engine, target, args);
  const std::string call = engine.entity(target).qualified_name + "(" + render_types(types) + ")";
  try {
    const CallSignature sig = select_callable(engine, target, types);
    if (expect.kind != OracleOutcome::Chosen) {
      why = call + ": library chose an overload, oracle says none/ambiguous";
      return false;
    }
    EntityId chosen = sig.callable_id;
    const Entity& c = engine.entity(chosen);
    if (c.kind == EntityKind::Instantiation && c.instantiation) chosen = c.instantiation->origin;
    if (chosen != expect.candidate) {
      why = call + ": library chose " + engine.entity(chosen).qualified_name + ", oracle chose " +
            engine.entity(expect.candidate).qualified_name;
      return false;
    }
    return true;
  } catch (const Error& e) {
    const ErrorCode code = e.code();
    const bool ok = (expect.kind == OracleOutcome::NoViable &&
                     (code == ErrorCode::NoViableOverload || code == ErrorCode::DeductionFailure)) ||
                    (expect.kind == OracleOutcome::Ambiguous && code == ErrorCode::AmbiguousOverload);
    if (!ok) why = call + ": library raised " + std::string(error_code_name(code)) + " (" + e.message() + ")";
    return ok;
  }
}

}  // namespace rbtest

#include "reflexbridge/reflex.hpp"

namespace rbtest {

inline std::vector<std::size_t> reflex_indices(ReflexKind kind) {
  return kind == ReflexKind::OVERLOAD_AT ? std::vector<std::size_t>{0, 1, 2} : std::vector<std::size_t>{0};
}

/// One line per (entity, kind, index, format): the described reply or the
/// error code. Throws if anything other than a reflection error escapes.
inline std::string sweep_entities(const Engine& engine, const std::vector<EntityId>& ids) {
  std::string out;
  for (EntityId id : ids) {
    for (ReflexKind kind : kAllReflexKinds) {
      for (std::size_t index : reflex_indices(kind)) {
        for (ReflexFormat format : kAllReflexFormats) {
          std::string line = engine.entity(id).qualified_name + " " + std::string(reflex_kind_name(kind));
          if (kind == ReflexKind::OVERLOAD_AT) line += "[" + std::to_string(index) + "]";
          line += " " + std::string(reflex_format_name(format)) + " -> ";
          try {
            line += describe_reply(engine, cpp_reflex(engine, id, kind, format, index));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::KindMismatch && e.code() != ErrorCode::IndexOutOfRange) throw;
            line += "error " + std::string(error_code_name(e.code()));
          }
          out += line + "\n";
        }
      }
    }
  }
  return out;
}

/// The full reflection sweep recorded in tests/golden/reflex/sweep.txt: every
/// declared entity of the corpus, then every instantiation created by typing
/// the benchmark kernels and requiring a few record types.
inline std::string reflection_sweep() {
  Engine engine;
  load_corpus(engine);
  std::string out = "# declared entities\n" + sweep_entities(engine, engine.all_entities());
  const std::size_t before = engine.entity_count();
  for (const auto& k : parse_kernels(table1_kernels())) type_kernel(engine, k, {array_type()});
  require_record(engine, parse_type("Tuple<f64, i32>", engine));
  require_record(engine, parse_type("Vec<Vec<f64>>", engine));
  std::vector<EntityId> fresh;
  const auto all = engine.all_entities();
  fresh.assign(all.begin() + static_cast<std::ptrdiff_t>(before), all.end());
  return out + "# instantiated entities\n" + sweep_entities(engine, fresh);
}

inline std::string golden_path(const std::string& rel) { return source_path("tests/golden/" + rel); }

/// Compares `actual` with a golden file (or rewrites it under RB_UPDATE_GOLDEN=1).
inline bool matches_golden(const std::string& rel, const std::string& actual, std::string& diff) {
  const std::string path = golden_path(rel);
  if (update_golden()) {
    write_text(path, actual);
    return true;
  }
  std::string expected;
  try {
    expected = read_text(path);
  } catch (const std::exception& e) {
    diff = e.what();
    return false;
  }
  if (expected == actual) return true;
  std::istringstream a(expected), b(actual);
  std::string la, lb;
  for (int line = 1;; ++line) {
    const bool ga = static_cast<bool>(std::getline(a, la));
    const bool gb = static_cast<bool>(std::getline(b, lb));
    if (!ga && !gb) break;
    if (!ga || !gb || la != lb) {
      diff = rel + ":" + std::to_string(line) + ": expected '" + (ga ? la : "<eof>") + "', got '" +
             (gb ? lb : "<eof>") + "'";
      break;
    }
  }
  return false;
}

}  // namespace rbtest
