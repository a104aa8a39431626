#include "reflexbridge/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "reflexbridge/dyn_runtime.hpp"
#include "reflexbridge/executor.hpp"
#include "reflexbridge/fixtures.hpp"
#include "reflexbridge/lowerer.hpp"
#include "reflexbridge/parser.hpp"
#include "reflexbridge/specializer.hpp"

namespace reflexbridge {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// `run` returns the kernel result; every repetition must reproduce `expect`.
template <class Run>
double median_group_mean(std::uint64_t reps, const Scalar& expect, const std::string& what, Run&& run) {
  std::vector<double> means;
  for (std::uint64_t done = 0; done < reps;) {
    const std::uint64_t n = std::min(kGroupSize, reps - done);
    bool same = true;
    const auto t0 = Clock::now();
    for (std::uint64_t i = 0; i < n; ++i) same &= run() == expect;
    means.push_back(seconds_since(t0) / static_cast<double>(n));
    if (!same) throw Error(ErrorCode::ChecksumMismatch, what + " result changed between repetitions");
    done += n;
  }
  return median(std::move(means));
}

const KernelAST& find_kernel(const std::vector<KernelAST>& kernels, const std::string& name) {
  for (const auto& k : kernels) {
    if (k.name == name) return k;
  }
  throw Error(ErrorCode::LoweringError, "built-in kernel '" + name + "' is missing");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string checksum_text(const Scalar& s) {
  return std::visit(
      [](auto v) -> std::string {
        using T = decltype(v);
        if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_integral_v<T>) return std::to_string(v);
        else return format_double(static_cast<double>(v));
      },
      s);
}

nlohmann::ordered_json checksum_json(const Scalar& s) {
  return std::visit([](auto v) -> nlohmann::ordered_json { return v; }, s);
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body,
                         std::size_t left_aligned) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : body) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::size_t pad = width[c] - cells[c].size();
      if (c) out << "  ";
      if (c < left_aligned) {
        out << cells[c] << (c + 1 < cells.size() ? std::string(pad, ' ') : "");
      } else {
        out << std::string(pad, ' ') << cells[c];
      }
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : body) line(row);
  return out.str();
}

void require_rows(bool empty) {
  if (empty) throw Error(ErrorCode::BadRequest, "no rows to report");
}

}  // namespace

std::string_view scaling_mode_name(ScalingMode mode) {
  return mode == ScalingMode::TupleArity ? "tuple-arity" : "vector-depth";
}

bool results_agree(const Scalar& a, const Scalar& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](auto x) {
        using T = decltype(x);
        const T y = std::get<T>(b);
        if constexpr (std::is_floating_point_v<T>) {
          if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
          if (x == y) return true;
          const double dx = x, dy = y;
          return std::fabs(dx - dy) <= 1e-12 * std::max(std::fabs(dx), std::fabs(dy));
        } else {
          return x == y;
        }
      },
      a);
}

BenchRow bench_case(std::string_view name, std::size_t size, std::uint64_t reps, std::uint64_t seed) {
  const BenchCase& bc = find_bench_case(name);
  if (size == 0) throw Error(ErrorCode::BadRequest, "size must be at least 1");
  if (reps == 0) throw Error(ErrorCode::BadRequest, "reps must be at least 1");

  Engine engine;
  parse_translation_unit(engine, table1_decls());
  const auto kernels = parse_kernels(table1_kernels());
  const KernelAST& kernel = find_kernel(kernels, bc.kernel);
  auto array = std::make_shared<const Array2D>(Array2D::random(size, size, seed));

  BenchRow row;
  row.case_name = bc.name;
  row.label = bc.label;
  row.reps = reps;

  auto t0 = Clock::now();
  const TypedKernel tk = type_kernel(engine, kernel, {TypeRef::array2d(TypeRef::f64())});
  row.specialize_time = seconds_since(t0);

  t0 = Clock::now();
  const LoadedKernel loaded(engine, lower(engine, tk));
  row.lower_time = seconds_since(t0);

  const std::vector<NativeValue> native_args{array};
  const std::vector<BoxedValue> boxed_args{box(array)};
  auto hot = [&] { return std::get<Scalar>(loaded.run(native_args)); };
  auto dynamic = [&] { return run_kernel_dynamic(engine, kernel, boxed_args).scalar(); };

  // Warm-up call on each path doubles as the correctness gate.
  const Scalar hot_result = hot();
  const Scalar dyn_result = dynamic();
  if (!results_agree(hot_result, dyn_result)) {
    throw Error(ErrorCode::ChecksumMismatch, "case '" + bc.name + "': typed path gave " + format_scalar(hot_result) +
                                                 ", boxed path gave " + format_scalar(dyn_result));
  }
  row.checksum = hot_result;

  row.hot_run_time = median_group_mean(reps, hot_result, "typed path", hot);
  row.dynamic_run_time = median_group_mean(reps, dyn_result, "boxed path", dynamic);
  row.speedup = row.dynamic_run_time / row.hot_run_time;
  return row;
}

std::string scaling_type(ScalingMode mode, std::uint64_t n) {
  std::string out;
  if (mode == ScalingMode::TupleArity) {
    out = "Tuple<";
    for (std::uint64_t i = 0; i < n; ++i) out += i ? ", f64" : "f64";
    return out + ">";
  }
  for (std::uint64_t i = 0; i < n; ++i) out += "Vec<";
  out += "f64";
  return out + std::string(n, '>');
}

std::vector<ScalingRow> bench_templates(ScalingMode mode, std::uint64_t n_max, std::uint64_t step) {
  if (n_max == 0) throw Error(ErrorCode::BadRequest, "max must be at least 1");
  if (step == 0) throw Error(ErrorCode::BadRequest, "step must be at least 1");
  std::vector<ScalingRow> rows;
  for (std::uint64_t n = 1; n <= n_max; n += step) {
    Engine engine;
    parse_translation_unit(engine, template_decls());
    const TypeRef type = parse_type(scaling_type(mode, n), engine);
    const auto t0 = Clock::now();
    instantiate(engine, type.entity(), type.args());
    ScalingRow row;
    row.wall_time = seconds_since(t0);
    row.mode = mode;
    row.n = n;
    row.instantiations = engine.stats().total_instantiations;
    row.node_count = engine.stats().node_count;
    row.order_log = engine.stats().order_log;
    rows.push_back(std::move(row));
  }
  return rows;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::Table;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json-lines") return ReportFormat::JsonLines;
  throw Error(ErrorCode::BadRequest, "unknown report format '" + std::string(name) + "'");
}

std::string report(const std::vector<BenchRow>& rows, ReportFormat format) {
  require_rows(rows.empty());
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Table: {
      std::vector<std::vector<std::string>> body;
      for (const auto& r : rows) {
        body.push_back({r.label, fmt("%.2e", r.specialize_time), fmt("%.2e", r.lower_time),
                        fmt("%.2e", r.hot_run_time), fmt("%.2e", r.dynamic_run_time), fmt("%.2fx", r.speedup),
                        std::to_string(r.reps), checksum_text(r.checksum)});
      }
      return render_table({"Benchmark case", "Specialize time (s)", "Lower time (s)", "Hot run time (s)",
                           "Dynamic run time (s)", "Speedup", "Reps", "Checksum"},
                          body, 1);
    }
    case ReportFormat::Csv:
      out << "case,specialize_time,lower_time,hot_run_time,dynamic_run_time,speedup,reps,checksum\n";
      for (const auto& r : rows) {
        out << r.case_name << ',' << fmt("%.6e", r.specialize_time) << ',' << fmt("%.6e", r.lower_time) << ','
            << fmt("%.6e", r.hot_run_time) << ',' << fmt("%.6e", r.dynamic_run_time) << ','
            << fmt("%.4f", r.speedup) << ',' << r.reps << ',' << checksum_text(r.checksum) << '\n';
      }
      return out.str();
    case ReportFormat::JsonLines:
      for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["case"] = r.case_name;
        j["specialize_time"] = r.specialize_time;
        j["lower_time"] = r.lower_time;
        j["hot_run_time"] = r.hot_run_time;
        j["dynamic_run_time"] = r.dynamic_run_time;
        j["speedup"] = r.speedup;
        j["reps"] = r.reps;
        j["checksum"] = checksum_json(r.checksum);
        out << j.dump() << '\n';
      }
      return out.str();
  }
  return out.str();
}

std::string report(const std::vector<ScalingRow>& rows, ReportFormat format) {
  require_rows(rows.empty());
  std::ostringstream out;
  switch (format) {
    case ReportFormat::Table: {
      std::vector<std::vector<std::string>> body;
      for (const auto& r : rows) {
        body.push_back({std::string(scaling_mode_name(r.mode)), std::to_string(r.n), std::to_string(r.instantiations),
                        std::to_string(r.node_count), fmt("%.2e", r.wall_time)});
      }
      return render_table({"Mode", "N", "Instantiations", "Nodes", "Wall time (s)"}, body, 1);
    }
    case ReportFormat::Csv:
      out << "mode,n,instantiations,node_count,wall_time\n";
      for (const auto& r : rows) {
        out << scaling_mode_name(r.mode) << ',' << r.n << ',' << r.instantiations << ',' << r.node_count << ','
            << fmt("%.6e", r.wall_time) << '\n';
      }
      return out.str();
    case ReportFormat::JsonLines:
      for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["mode"] = scaling_mode_name(r.mode);
        j["n"] = r.n;
        j["instantiations"] = r.instantiations;
        j["node_count"] = r.node_count;
        j["wall_time"] = r.wall_time;
        out << j.dump() << '\n';
      }
      return out.str();
  }
  return out.str();
}

}  // namespace reflexbridge
