// fixtures.hpp - the built-in corpus: benchmark declarations and kernels,
// template scaling declarations, and extra reflection coverage.
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace reflexbridge {

std::string_view table1_decls();
std::string_view table1_kernels();
std::string_view template_decls();
std::string_view misc_decls();

struct BenchCase {
  std::string name;    // command-line name, e.g. "templated-fns"
  std::string kernel;  // kernel in table1_kernels()
  std::string label;   // row label for reports
};

/// The five benchmark cases in report order.
const std::vector<BenchCase>& bench_cases();

/// Throws UnknownCase.
const BenchCase& find_bench_case(std::string_view name);

}  // namespace reflexbridge
