#include <doctest.h>

#include <json.hpp>

#include "reflexbridge/bench.hpp"
#include "support.hpp"

using namespace rbtest;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::BadRequest;
}

}  // namespace

TEST_CASE("degenerate case: one element, one repetition") {
  const BenchRow row = bench_case("fn-no-args", 1, 1);
  CHECK(row.case_name == "fn-no-args");
  CHECK(row.label == "Function w/o args");
  CHECK(row.reps == 1);
  CHECK(row.specialize_time > 0);
  CHECK(row.lower_time > 0);
  CHECK(row.hot_run_time > 0);
  CHECK(row.dynamic_run_time > 0);
  const Array2D a = Array2D::random(1, 1, 42);
  CHECK(agree(row.checksum, Scalar{oracle_case("fn_no_args", a)}));
}

TEST_CASE("checksums match the flat-loop oracle for every case") {
  for (const auto& c : bench_cases()) {
    const BenchRow row = bench_case(c.name, 9, 3, 5);
    CHECK(row.label == c.label);
    CHECK_MESSAGE(agree(row.checksum, Scalar{oracle_case(c.kernel, Array2D::random(9, 9, 5))}), c.name);
  }
}

TEST_CASE("speedup is dynamic over hot time") {
  for (const auto& c : bench_cases()) {
    const BenchRow row = bench_case(c.name, 10, 60);
    CHECK(row.speedup == doctest::Approx(row.dynamic_run_time / row.hot_run_time).epsilon(1e-12));
  }
}

TEST_CASE("bench_case argument errors") {
  CHECK(error_of([] { bench_case("nosuch", 10, 1); }) == ErrorCode::UnknownCase);
  CHECK(error_of([] { bench_case("methods", 0, 1); }) == ErrorCode::BadRequest);
  CHECK(error_of([] { bench_case("methods", 1, 0); }) == ErrorCode::BadRequest);
  CHECK(error_of([] { find_bench_case("Class methods"); }) == ErrorCode::UnknownCase);
}

TEST_CASE("results_agree tolerances") {
  CHECK(results_agree(Scalar{1.0}, Scalar{1.0 + 1e-15}));
  CHECK_FALSE(results_agree(Scalar{1.0}, Scalar{1.0 + 1e-9}));
  CHECK(results_agree(Scalar{std::nan("")}, Scalar{std::nan("")}));
  CHECK_FALSE(results_agree(Scalar{std::int64_t{1}}, Scalar{1.0}));
  CHECK_FALSE(results_agree(Scalar{std::int64_t{1}}, Scalar{std::int64_t{2}}));
  CHECK(results_agree(Scalar{std::int32_t{-4}}, Scalar{std::int32_t{-4}}));
}

TEST_CASE("bench_templates examples") {
  auto counts = [](ScalingMode mode, std::uint64_t n_max) {
    std::vector<std::uint64_t> out;
    for (const auto& r : bench_templates(mode, n_max)) out.push_back(r.instantiations);
    return out;
  };
  CHECK(counts(ScalingMode::TupleArity, 3) == std::vector<std::uint64_t>{2, 3, 4});
  CHECK(counts(ScalingMode::VectorDepth, 3) == std::vector<std::uint64_t>{1, 2, 3});
  const auto one = bench_templates(ScalingMode::TupleArity, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].order_log == std::vector<std::string>{"Tuple<>", "Tuple<f64>"});
  const auto stepped = bench_templates(ScalingMode::VectorDepth, 10, 4);
  REQUIRE(stepped.size() == 3);
  CHECK(stepped[2].n == 9);
  CHECK(scaling_type(ScalingMode::TupleArity, 2) == "Tuple<f64, f64>");
  CHECK(scaling_type(ScalingMode::VectorDepth, 2) == "Vec<Vec<f64>>");
}

TEST_CASE("property: scaling is monotone and matches the closed form") {
  for (const auto mode : {ScalingMode::TupleArity, ScalingMode::VectorDepth}) {
    const auto rows = bench_templates(mode, 24);
    REQUIRE(rows.size() == 24);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      CHECK(r.n == i + 1);
      CHECK(r.mode == mode);
      CHECK(r.instantiations == (mode == ScalingMode::TupleArity ? r.n + 1 : r.n));
      CHECK(r.order_log.size() == r.instantiations);
      if (i > 0) {
        CHECK(r.instantiations > rows[i - 1].instantiations);
        CHECK(r.node_count > rows[i - 1].node_count);
      }
    }
    // Innermost first: each logged name is contained in the next one.
    const auto& log = rows.back().order_log;
    for (std::size_t i = 1; i < log.size(); ++i) {
      if (mode == ScalingMode::VectorDepth) CHECK(log[i] == "Vec<" + log[i - 1] + ">");
      else CHECK(log[i].size() > log[i - 1].size());
    }
  }
}

TEST_CASE("table report mirrors the benchmark columns") {
  std::vector<BenchRow> rows;
  for (const auto& c : bench_cases()) rows.push_back(bench_case(c.name, 3, 2));
  const auto lines = lines_of(report(rows, ReportFormat::Table));
  REQUIRE(lines.size() == 7);
  for (const char* col : {"Specialize time", "Lower time", "Hot run time", "Dynamic run time", "Speedup"}) {
    CHECK(lines[0].find(col) != std::string::npos);
  }
  CHECK(lines[2].rfind("Function w/o args", 0) == 0);
  CHECK(lines[6].rfind("Class methods", 0) == 0);
}

TEST_CASE("csv and json-lines reports are machine readable") {
  const std::vector<BenchRow> rows = {bench_case("methods", 4, 2), bench_case("data-members", 4, 2)};
  const auto csv = lines_of(report(rows, ReportFormat::Csv));
  REQUIRE(csv.size() == 3);
  CHECK(csv[0] == "case,specialize_time,lower_time,hot_run_time,dynamic_run_time,speedup,reps,checksum");
  CHECK(csv[1].rfind("methods,", 0) == 0);
  CHECK(std::count(csv[2].begin(), csv[2].end(), ',') == 7);
  const auto jl = lines_of(report(rows, ReportFormat::JsonLines));
  REQUIRE(jl.size() == 2);
  const auto j = nlohmann::json::parse(jl[1]);
  CHECK(j["case"] == "data-members");
  CHECK(j["reps"] == 2);
  CHECK(j["checksum"].get<double>() == std::get<double>(rows[1].checksum));

  const auto scaling = bench_templates(ScalingMode::TupleArity, 4);
  const auto scsv = lines_of(report(scaling, ReportFormat::Csv));
  REQUIRE(scsv.size() == 5);
  CHECK(scsv[0] == "mode,n,instantiations,node_count,wall_time");
  CHECK(scsv[4].rfind("tuple-arity,4,5,", 0) == 0);
  const auto sjl = lines_of(report(scaling, ReportFormat::JsonLines));
  REQUIRE(sjl.size() == 4);
  CHECK(nlohmann::json::parse(sjl[0])["instantiations"] == 2);
  CHECK(lines_of(report(scaling, ReportFormat::Table)).size() == 6);
}

TEST_CASE("report errors") {
  CHECK(error_of([] { report(std::vector<BenchRow>{}, ReportFormat::Table); }) == ErrorCode::BadRequest);
  CHECK(error_of([] { report(std::vector<ScalingRow>{}, ReportFormat::Csv); }) == ErrorCode::BadRequest);
  CHECK(error_of([] { parse_report_format("xml"); }) == ErrorCode::BadRequest);
  CHECK(parse_report_format("json-lines") == ReportFormat::JsonLines);
  CHECK(parse_report_format("csv") == ReportFormat::Csv);
  CHECK(parse_report_format("table") == ReportFormat::Table);
}

TEST_CASE("reports are deterministic for fixed rows") {
  BenchRow row;
  row.case_name = "methods";
  row.label = "Class methods";
  row.specialize_time = 1e-5;
  row.lower_time = 2e-5;
  row.hot_run_time = 3e-7;
  row.dynamic_run_time = 6e-6;
  row.speedup = 20.0;
  row.reps = 3000;
  row.checksum = Scalar{1.5};
  const std::string csv = report(std::vector<BenchRow>{row}, ReportFormat::Csv);
  CHECK(csv == report(std::vector<BenchRow>{row}, ReportFormat::Csv));
  CHECK(lines_of(csv)[1] == "methods,1.000000e-05,2.000000e-05,3.000000e-07,6.000000e-06,20.0000,3000,1.5");
}
