#include "reflexbridge/fixtures.hpp"

#include "reflexbridge/error.hpp"

namespace reflexbridge {

const std::vector<BenchCase>& bench_cases() {
  static const std::vector<BenchCase> cases = {
      {"fn-no-args", "fn_no_args", "Function w/o args"},
      {"overloaded-fns", "overloaded_fns", "Overloaded functions"},
      {"templated-fns", "templated_fns", "Templated free functions"},
      {"data-members", "data_members", "Class data members"},
      {"methods", "methods", "Class methods"},
  };
  return cases;
}

const BenchCase& find_bench_case(std::string_view name) {
  for (const auto& c : bench_cases()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::UnknownCase, "unknown benchmark case '" + std::string(name) + "'");
}

}  // namespace reflexbridge
