// bench.hpp - benchmark harness for the five kernel cases and the template
// instantiation scaling workloads, plus report rendering.
//
// Timing: steady clock, repetitions batched into groups of kGroupSize, the
// reported per-iteration time is the median of the group means.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "reflexbridge/engine.hpp"
#include "reflexbridge/scalar.hpp"

namespace reflexbridge {

inline constexpr std::uint64_t kGroupSize = 30;

struct BenchRow {
  std::string case_name;
  std::string label;
  double specialize_time = 0;    // seconds, typing on a fresh engine
  double lower_time = 0;         // seconds, lowering plus loading
  double hot_run_time = 0;       // seconds per iteration, typed path
  double dynamic_run_time = 0;   // seconds per iteration, boxed path
  double speedup = 0;            // dynamic / hot
  std::uint64_t reps = 0;
  Scalar checksum;
};

enum class ScalingMode { TupleArity, VectorDepth };

std::string_view scaling_mode_name(ScalingMode mode);

struct ScalingRow {
  ScalingMode mode = ScalingMode::TupleArity;
  std::uint64_t n = 0;
  std::uint64_t instantiations = 0;
  std::uint64_t node_count = 0;
  double wall_time = 0;
  std::vector<std::string> order_log;
};

/// Results agree when integers are identical and floats are within 1e-12
/// relative error (or both NaN). Types must match.
bool results_agree(const Scalar& a, const Scalar& b);

/// Runs one case on a `size` x `size` seeded random array. Throws
/// UnknownCase, or ChecksumMismatch when the two paths disagree.
BenchRow bench_case(std::string_view name, std::size_t size, std::uint64_t reps, std::uint64_t seed = 42);

/// Canonical type of a scaling workload: `Tuple<f64, ...>` with n elements
/// or `Vec<...<f64>>` nested n deep.
std::string scaling_type(ScalingMode mode, std::uint64_t n);

/// One row per n in 1, 1+step, ... <= n_max, each on a fresh engine.
std::vector<ScalingRow> bench_templates(ScalingMode mode, std::uint64_t n_max, std::uint64_t step = 1);

enum class ReportFormat { Table, Csv, JsonLines };

/// Throws BadRequest for an unknown name.
ReportFormat parse_report_format(std::string_view name);

/// Throws BadRequest on empty input.
std::string report(const std::vector<BenchRow>& rows, ReportFormat format);
std::string report(const std::vector<ScalingRow>& rows, ReportFormat format);

}  // namespace reflexbridge
