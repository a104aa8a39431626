// reflexbridge - command-line driver.
//
//   reflexbridge parse --decls F [--kernel K]
//   reflexbridge run --decls F --kernel K [--name N] --args SPEC...
//   reflexbridge jit-run --decls F --kernel K [--name N] --args SPEC... [--dump-ir] [--emit-stats]
//   reflexbridge bench table1 [--size N] [--reps R] [--case C]... [--format table|csv|json-lines]
//   reflexbridge bench templates --mode tuple|vector --max N [--step S] [--format ...]
//   reflexbridge serve [--stdio | --port P]
//
// Exit status: 0 success, 1 user error, 2 internal invariant failure.

#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "reflexbridge/bench.hpp"
#include "reflexbridge/dyn_runtime.hpp"
#include "reflexbridge/executor.hpp"
#include "reflexbridge/fixtures.hpp"
#include "reflexbridge/lowerer.hpp"
#include "reflexbridge/parser.hpp"
#include "reflexbridge/protocol.hpp"
#include "reflexbridge/specializer.hpp"

namespace rb = reflexbridge;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// `zeros(r,c)`, `ones(r,c)`, `random(r,c[,seed])` or a scalar literal.
rb::NativeValue parse_arg_value(const std::string& spec) {
  static const std::regex array_re(R"(\s*(zeros|ones|random)\s*\(\s*(\d+)\s*,\s*(\d+)\s*(?:,\s*(\d+)\s*)?\)\s*)");
  std::smatch m;
  if (std::regex_match(spec, m, array_re)) {
    const std::size_t rows = std::stoull(m[2]);
    const std::size_t cols = std::stoull(m[3]);
    if (m[1] == "random") {
      const std::uint64_t seed = m[4].matched ? std::stoull(m[4]) : 0;
      return std::make_shared<const rb::Array2D>(rb::Array2D::random(rows, cols, seed));
    }
    if (m[4].matched) throw UsageError("only random() takes a seed: '" + spec + "'");
    const double fill = m[1] == "ones" ? 1.0 : 0.0;
    return std::make_shared<const rb::Array2D>(rows, cols, fill);
  }
  return rb::parse_scalar_literal(spec);
}

// Arguments are either all positional or all `name=value`.
std::vector<rb::NativeValue> bind_args(const rb::KernelAST& k, const std::vector<std::string>& specs) {
  static const std::regex named_re(R"(\s*([A-Za-z_][A-Za-z0-9_]*)\s*=(.*))");
  std::vector<std::optional<rb::NativeValue>> slots(k.params.size());
  std::size_t positional = 0;
  bool named = false;
  for (const auto& spec : specs) {
    std::smatch m;
    if (std::regex_match(spec, m, named_re)) {
      named = true;
      std::size_t i = 0;
      while (i < k.params.size() && k.params[i].name != m[1]) ++i;
      if (i == k.params.size()) throw UsageError("kernel '" + k.name + "' has no parameter '" + m[1].str() + "'");
      if (slots[i]) throw UsageError("parameter '" + m[1].str() + "' given twice");
      slots[i] = parse_arg_value(m[2]);
    } else {
      if (named) throw UsageError("positional argument after named ones");
      if (positional >= slots.size()) throw UsageError("too many arguments for kernel '" + k.name + "'");
      slots[positional++] = parse_arg_value(spec);
    }
  }
  std::vector<rb::NativeValue> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) throw UsageError("missing argument for parameter '" + k.params[i].name + "'");
    out.push_back(*slots[i]);
  }
  return out;
}

rb::TypeRef native_type(const rb::NativeValue& v) {
  if (const auto* s = std::get_if<rb::Scalar>(&v)) return rb::scalar_type(*s);
  return rb::TypeRef::array2d(rb::TypeRef::f64());
}

const rb::KernelAST& pick_kernel(const std::vector<rb::KernelAST>& kernels, const std::string& name) {
  if (!name.empty()) {
    for (const auto& k : kernels) {
      if (k.name == name) return k;
    }
    throw UsageError("no kernel named '" + name + "'");
  }
  if (kernels.size() == 1) return kernels.front();
  std::string names;
  for (const auto& k : kernels) names += (names.empty() ? "" : ", ") + k.name;
  throw UsageError("kernel file defines " + std::to_string(kernels.size()) + " kernels (" + names +
                   "); choose one with --name");
}

struct RunOptions {
  std::string decls;
  std::string kernel;
  std::string name;
  std::vector<std::string> args;
  bool dump_ir = false;
  bool emit_stats = false;
};

int cmd_parse(const std::string& decls, const std::string& kernel) {
  rb::Engine engine;
  bool first = true;
  for (rb::EntityId id : rb::parse_translation_unit(engine, read_file(decls))) {
    std::cout << (first ? "" : "\n") << rb::print_decl(engine, id);
    first = false;
  }
  if (!kernel.empty()) {
    for (const auto& k : rb::parse_kernels(read_file(kernel))) {
      std::cout << "kernel " << k.name << "(";
      for (std::size_t i = 0; i < k.params.size(); ++i) {
        std::cout << (i ? ", " : "") << k.params[i].name;
        if (k.params[i].type) std::cout << ": " << rb::render_type(*k.params[i].type);
      }
      std::cout << ")";
      if (k.result) std::cout << " -> " << rb::render_type(*k.result);
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_run(const RunOptions& o, bool typed) {
  rb::Engine engine;
  rb::parse_translation_unit(engine, read_file(o.decls));
  const auto kernels = rb::parse_kernels(read_file(o.kernel));
  const rb::KernelAST& k = pick_kernel(kernels, o.name);
  const auto args = bind_args(k, o.args);
  rb::Scalar result;
  if (typed) {
    std::vector<rb::TypeRef> types;
    for (const auto& a : args) types.push_back(native_type(a));
    const rb::TypedIR ir = rb::lower(engine, rb::type_kernel(engine, k, types));
    if (o.dump_ir) std::cout << rb::dump_ir(ir);
    result = std::get<rb::Scalar>(rb::execute(engine, ir, args));
  } else {
    std::vector<rb::BoxedValue> boxed;
    for (const auto& a : args) boxed.push_back(rb::box(a));
    result = rb::run_kernel_dynamic(engine, k, boxed).scalar();
  }
  std::cout << rb::format_scalar(result) << "\n";
  if (o.emit_stats) std::cout << rb::stats_json(engine).dump() << "\n";
  return 0;
}

int cmd_bench_table1(std::size_t size, std::uint64_t reps, const std::vector<std::string>& cases,
                     const std::string& format) {
  const auto fmt = rb::parse_report_format(format);
  std::vector<std::string> names = cases;
  if (names.empty()) {
    for (const auto& c : rb::bench_cases()) names.push_back(c.name);
  }
  std::vector<rb::BenchRow> rows;
  for (const auto& n : names) rows.push_back(rb::bench_case(n, size, reps));
  std::cout << rb::report(rows, fmt);
  return 0;
}

int cmd_bench_templates(const std::string& mode, std::uint64_t max, std::uint64_t step, const std::string& format) {
  const auto fmt = rb::parse_report_format(format);
  const auto m = mode == "tuple" ? rb::ScalingMode::TupleArity : rb::ScalingMode::VectorDepth;
  std::cout << rb::report(rb::bench_templates(m, max, step), fmt);
  return 0;
}

int cmd_serve(int port) {
  if (port < 0) {
    rb::serve_stream(std::cin, std::cout);
    return 0;
  }
  rb::TcpServer server(static_cast<std::uint16_t>(port));
  std::cerr << "listening on 127.0.0.1:" << server.port() << std::endl;
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reflection-driven interop engine"};
  app.require_subcommand(1);

  std::string decls, kernel;
  auto* parse = app.add_subcommand("parse", "parse declarations (and kernels) and print them back");
  parse->add_option("--decls", decls, "declaration file (.hxx)")->required();
  parse->add_option("--kernel", kernel, "kernel file (.krn)");

  RunOptions run_opts;
  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--decls", run_opts.decls, "declaration file (.hxx)")->required();
    sub->add_option("--kernel", run_opts.kernel, "kernel file (.krn)")->required();
    sub->add_option("--name", run_opts.name, "kernel to run when the file has several");
    sub->add_option("--args", run_opts.args, "name=zeros(R,C) | ones(R,C) | random(R,C[,SEED]) | 7i64 ...");
  };
  auto* run = app.add_subcommand("run", "run a kernel on the boxed path");
  add_run_options(run);
  auto* jit = app.add_subcommand("jit-run", "specialize, lower and run a kernel on the typed path");
  add_run_options(jit);
  jit->add_flag("--dump-ir", run_opts.dump_ir, "print the lowered IR");
  jit->add_flag("--emit-stats", run_opts.emit_stats, "print instantiation statistics as JSON");

  auto* bench = app.add_subcommand("bench", "benchmarks");
  bench->require_subcommand(1);
  std::size_t size = 100;
  std::uint64_t reps = 3000;
  std::vector<std::string> cases;
  std::string format = "table";
  auto* table1 = bench->add_subcommand("table1", "five kernel cases on both paths");
  table1->add_option("--size", size, "array dimension")->check(CLI::PositiveNumber);
  table1->add_option("--reps", reps, "repetitions per path")->check(CLI::PositiveNumber);
  table1->add_option("--case", cases, "case to run (repeatable)");
  table1->add_option("--format", format, "table | csv | json-lines");
  std::string mode;
  std::uint64_t max = 0, step = 1;
  auto* templates = bench->add_subcommand("templates", "template instantiation scaling");
  templates->add_option("--mode", mode, "tuple | vector")->required()->check(CLI::IsMember({"tuple", "vector"}));
  templates->add_option("--max", max, "largest arity or depth")->required()->check(CLI::PositiveNumber);
  templates->add_option("--step", step, "increment")->check(CLI::PositiveNumber);
  templates->add_option("--format", format, "table | csv | json-lines");

  auto* serve = app.add_subcommand("serve", "serve the request/reply protocol");
  bool use_stdio = false;
  int port = -1;
  auto* stdio_flag = serve->add_flag("--stdio", use_stdio, "newline-delimited JSON on stdin/stdout (default)");
  serve->add_option("--port", port, "loopback TCP port (0 picks one)")->check(CLI::Range(0, 65535))->excludes(stdio_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*parse) return cmd_parse(decls, kernel);
    if (*run) return cmd_run(run_opts, false);
    if (*jit) return cmd_run(run_opts, true);
    if (*table1) return cmd_bench_table1(size, reps, cases, format);
    if (*templates) return cmd_bench_templates(mode, max, step, format);
    if (*serve) return cmd_serve(port);
  } catch (const rb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rb::is_internal(e.code()) ? 2 : 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
