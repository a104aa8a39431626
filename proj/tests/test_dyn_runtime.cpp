#include <doctest.h>

#include <limits>
#include <random>

#include "support.hpp"

using namespace rbtest;

namespace {

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::BadRequest;
}

Scalar call(Engine& engine, const std::string& name, const std::vector<Scalar>& args) {
  std::vector<BoxedValue> boxed;
  for (const auto& a : args) boxed.push_back(box(a));
  return dyn_call(engine, engine.lookup(name).id, boxed).scalar();
}

}  // namespace

TEST_CASE("box and unbox") {
  const BoxedValue seven = box(Scalar{std::int64_t{7}});
  CHECK(seven.tag() == BoxTag::I64);
  CHECK(unbox(seven, TypeRef::i64()) == Scalar{std::int64_t{7}});
  CHECK(unbox(box(Scalar{std::int32_t{5}}), TypeRef::f64()) == Scalar{5.0});
  CHECK(unbox(box(Scalar{std::int32_t{5}}), TypeRef::i64()) == Scalar{std::int64_t{5}});
  CHECK(unbox(box(Scalar{1.5f}), TypeRef::f64()) == Scalar{1.5});
  CHECK(error_of([] { unbox(box(Scalar{1.5}), TypeRef::i32()); }) == ErrorCode::TagMismatch);
  CHECK(error_of([] { unbox(box(Scalar{std::int64_t{1}}), TypeRef::i32()); }) == ErrorCode::TagMismatch);
  CHECK(error_of([] { unbox(box(Scalar{1.0}), TypeRef::f32()); }) == ErrorCode::TagMismatch);
  CHECK(error_of([] { unbox(box(make_array("ones", 2)), TypeRef::f64()); }) == ErrorCode::TagMismatch);
}

TEST_CASE("arrays box by reference and unbox exactly") {
  const ArrayPtr a = make_array("random", 4);
  const BoxedValue b = box(a);
  CHECK(b.tag() == BoxTag::Arr);
  CHECK(b.array() == a);
  CHECK(std::get<ArrayPtr>(unbox_native(b)) == a);
  CHECK(error_of([&] { b.scalar(); }) == ErrorCode::TagMismatch);
}

TEST_CASE("property: unbox(box(v), type(v)) == v") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> any_i64;
  std::uniform_real_distribution<double> any_f(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<Scalar> values = {
        Scalar{(any_i64(rng) & 1) != 0},
        Scalar{static_cast<std::int32_t>(any_i64(rng))},
        Scalar{any_i64(rng)},
        Scalar{static_cast<float>(any_f(rng))},
        Scalar{any_f(rng)},
    };
    for (const auto& v : values) {
      const BoxedValue b = box(v);
      CHECK(b.is_scalar());
      CHECK(b.type() == scalar_type(v));
      CHECK(unbox(b, scalar_type(v)) == v);
      CHECK(std::get<Scalar>(unbox_native(b)) == v);
      // box(unbox(b)) reproduces the tag and payload.
      const BoxedValue again = box(unbox(b, b.type()));
      CHECK(again.tag() == b.tag());
      CHECK(again.scalar() == b.scalar());
    }
  }
  CHECK(std::isnan(std::get<double>(unbox(box(Scalar{std::nan("")}), TypeRef::f64()))));
}

TEST_CASE("dyn_call on the fixture functions") {
  Engine engine;
  load_corpus(engine);
  CHECK(call(engine, "add42", {0.0}) == Scalar{42.0});
  CHECK(call(engine, "add42", {std::int64_t{0}}) == Scalar{std::int64_t{42}});
  CHECK(call(engine, "f2", {std::int32_t{1}}) == Scalar{std::int32_t{43}});
  CHECK(call(engine, "f2", {1.0}) == Scalar{43.0});
  CHECK(call(engine, "f2", {std::int64_t{1}}) == Scalar{43.0});
  CHECK(call(engine, "answer", {}) == Scalar{42.0});
  CHECK(call(engine, "geo::dot", {2.0, 3.5}) == Scalar{7.0});
  CHECK(call(engine, "S::get", {}) == Scalar{1.5});
  CHECK(call(engine, "S::scale", {4.0}) == Scalar{6.0});
  const std::vector<BoxedValue> one_f32{box(Scalar{1.5f})};
  CHECK(dyn_call(engine, engine.lookup("add42").id, one_f32, std::vector<TypeRef>{TypeRef::f64()}).scalar() ==
        Scalar{43.5});
}

TEST_CASE("dyn_call errors") {
  Engine engine;
  load_corpus(engine);
  CHECK(error_of([&] { call(engine, "f3", {std::int32_t{1}}); }) == ErrorCode::AmbiguousOverload);
  CHECK(error_of([&] { call(engine, "f2", {true, true}); }) == ErrorCode::NoViableOverload);
  CHECK(error_of([&] { call(engine, "add42", {1.0, 2.0}); }) == ErrorCode::DeductionFailure);
  CHECK(error_of([&] { call(engine, "twice", {1.0}); }) == ErrorCode::AmbiguousOverload);
}

TEST_CASE("method calls on an explicit receiver") {
  Engine engine;
  load_corpus(engine);
  const InstancePtr p = construct_instance(engine, parse_type("geo::Point", engine));
  CHECK(p->slots.at("x").scalar() == Scalar{0.0});
  CHECK(p->slots.at("y").scalar() == Scalar{2.5});
  p->slots["x"] = box(Scalar{4.0});
  CHECK(dyn_call_method(engine, engine.lookup("geo::Point::norm1").id, p, {}).scalar() == Scalar{6.5});
}

TEST_CASE("run_kernel_dynamic examples") {
  Engine engine;
  load_corpus(engine);
  const auto kernels = parse_kernels(table1_kernels());
  const std::vector<BoxedValue> zeros{box(make_array("zeros", 100))};
  CHECK(run_kernel_dynamic(engine, kernel_named(kernels, "templated_fns"), zeros).scalar() == Scalar{8400.0});
  CHECK(run_kernel_dynamic(engine, kernel_named(kernels, "data_members"), zeros).scalar() == Scalar{150.0});
  CHECK(run_kernel_dynamic(engine, parse_kernel("kernel k() -> f64 { return 1.0; }"), {}).scalar() == Scalar{1.0});
  const std::vector<BoxedValue> ones{box(make_array("ones", 100))};
  CHECK(run_kernel_dynamic(engine, kernel_named(kernels, "templated_fns"), ones).scalar() == Scalar{8600.0});
}

TEST_CASE("run_kernel_dynamic checks arguments and bounds") {
  Engine engine;
  load_corpus(engine);
  const KernelAST k = kernel_named(parse_kernels(table1_kernels()), "fn_no_args");
  CHECK(error_of([&] { run_kernel_dynamic(engine, k, {}); }) == ErrorCode::ArityMismatch);
  CHECK(error_of([&] { run_kernel_dynamic(engine, k, {box(Scalar{1.0})}); }) == ErrorCode::TagMismatch);
  const KernelAST oob = parse_kernel("kernel k(a: array2d<f64>) -> f64 { return a[0, a.cols]; }");
  CHECK(error_of([&] { run_kernel_dynamic(engine, oob, {box(make_array("ones", 3))}); }) ==
        ErrorCode::IndexOutOfBounds);
}

TEST_CASE("property: the boxed path agrees with the flat-loop oracle") {
  Engine engine;
  load_corpus(engine);
  const auto kernels = parse_kernels(table1_kernels());
  for (const auto& c : bench_cases()) {
    for (const std::string fill : {"zeros", "ones", "random"}) {
      for (std::size_t n : {1, 7, 30}) {
        const ArrayPtr a = make_array(fill, n, 11 + n);
        const Scalar got = run_boxed(engine, kernel_named(kernels, c.kernel), {a});
        CHECK_MESSAGE(agree(got, Scalar{oracle_case(c.kernel, *a)}), c.kernel << " " << fill << " " << n);
      }
    }
  }
}

TEST_CASE("property: one resolution per dynamic call") {
  Engine engine;
  load_corpus(engine);
  const KernelAST k = kernel_named(parse_kernels(table1_kernels()), "templated_fns");
  for (std::size_t n : {1, 5, 40}) {
    const std::uint64_t before = engine.counters().resolutions;
    run_boxed(engine, k, {make_array("ones", n)});
    CHECK(engine.counters().resolutions - before == 2 * n);
  }
  const EntityId f2 = engine.lookup("f2").id;
  const std::uint64_t before = engine.counters().resolutions;
  for (int i = 0; i < 17; ++i) dyn_call(engine, f2, {box(Scalar{std::int32_t{i}})});
  CHECK(engine.counters().resolutions - before == 17);
}

TEST_CASE("property: instances do not share slots") {
  Engine engine;
  load_corpus(engine);
  for (const std::string spelling : {"S", "geo::Point", "Tuple<f64, i32>", "Vec<Vec<f64>>"}) {
    const TypeRef t = parse_type(spelling, engine);
    const InstancePtr a = construct_instance(engine, t);
    const InstancePtr b = construct_instance(engine, t);
    REQUIRE(a != b);
    CHECK(a->slots.size() == engine.data_members(a->cls).size());
    for (auto& [name, v] : a->slots) {
      if (v.is_scalar()) {
        const Scalar before = b->slots.at(name).scalar();
        v = box(convert_scalar(Scalar{99.0}, v.type().kind()));
        CHECK(b->slots.at(name).scalar() == before);
      } else {
        CHECK(v.instance() != b->slots.at(name).instance());
      }
    }
  }
}

TEST_CASE("integer arithmetic wraps and division by zero is an error") {
  Engine engine;
  parse_translation_unit(engine,
                         "int div(int a, int b) { return a / b; }\n"
                         "long inc(long a) { return a + 1; }\n"
                         "double fdiv(double a, double b) { return a / b; }\n"
                         "int spin(int n) { return spin(n + 1); }\n");
  const std::int64_t max64 = std::numeric_limits<std::int64_t>::max();
  CHECK(call(engine, "inc", {max64}) == Scalar{std::numeric_limits<std::int64_t>::min()});
  CHECK(call(engine, "div", {std::int32_t{-7}, std::int32_t{2}}) == Scalar{std::int32_t{-3}});
  CHECK(call(engine, "div", {std::numeric_limits<std::int32_t>::min(), std::int32_t{-1}}) ==
        Scalar{std::numeric_limits<std::int32_t>::min()});
  CHECK(error_of([&] { call(engine, "div", {std::int32_t{1}, std::int32_t{0}}); }) == ErrorCode::EvalError);
  CHECK(std::isinf(std::get<double>(call(engine, "fdiv", {1.0, 0.0}))));
  CHECK(error_of([&] { call(engine, "spin", {std::int32_t{0}}); }) == ErrorCode::EvalError);
}

TEST_CASE("float to integer conversion truncates toward zero") {
  Engine engine;
  parse_translation_unit(engine, "int cut(double v) { return int(v); }");
  CHECK(call(engine, "cut", {2.9}) == Scalar{std::int32_t{2}});
  CHECK(call(engine, "cut", {-2.9}) == Scalar{std::int32_t{-2}});
  CHECK(error_of([&] { call(engine, "cut", {1e12}); }) == ErrorCode::EvalError);
}
