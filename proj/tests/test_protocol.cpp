#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <random>
#include <thread>

#include "reflexbridge/protocol.hpp"
#include "support.hpp"

using namespace rbtest;

namespace {

const char* const kTranscripts[] = {"declare",    "reflect",    "list_members", "invoke",   "run_kernel",
                                    "jit_kernel", "stats",      "shutdown",     "errors"};

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Replies are the only lines carrying "ok"; anything else, parseable or not, is a request.
bool is_reply(const std::string& line) {
  const Json j = Json::parse(line, nullptr, false);
  return j.is_object() && j.contains("ok");
}

Json reply(Session& s, const std::string& line) { return Json::parse(s.handle(line)); }

std::string declare_corpus() {
  Json req{{"id", 0}, {"op", "declare"}};
  std::string all;
  for (const auto& src : corpus_decls()) all += src + "\n";
  req["source"] = all;
  req["kernels"] = std::string(table1_kernels());
  return req.dump();
}

}  // namespace

TEST_CASE("golden transcripts replay byte-identically") {
  for (const char* name : kTranscripts) {
    const std::string rel = std::string("protocol/") + name + ".jsonl";
    const auto lines = lines_of(read_text(golden_path(rel)));
    Session session;
    if (update_golden()) {
      std::string out;
      for (const auto& line : lines) {
        if (is_reply(line)) continue;
        out += line + "\n" + session.handle(line) + "\n";
      }
      write_text(golden_path(rel), out);
      continue;
    }
    REQUIRE_MESSAGE(lines.size() % 2 == 0, rel);
    for (std::size_t i = 0; i < lines.size(); i += 2) {
      CHECK_MESSAGE(session.handle(lines[i]) == lines[i + 1], rel << ":" << i + 2);
    }
  }
}

TEST_CASE("the documented request/reply examples") {
  Session s;
  s.handle(declare_corpus());
  CHECK(s.handle(R"({"id":1,"op":"reflect","entity":"add42","kind":"IS_TEMPLATE","format":"STRING"})") ==
        R"({"id":1,"ok":true,"value":"true"})");
  CHECK(s.handle(R"({"id":2,"op":"invoke","target":"add42","args":[{"t":"f64","v":0.0}]})") ==
        R"({"id":2,"ok":true,"value":{"t":"f64","v":42.0}})");
  CHECK(s.handle(R"({"id":3,"op":"nosuch"})") == R"({"id":3,"ok":false,"error":"unknown op"})");
}

TEST_CASE("both kernel paths agree over the wire") {
  Session s;
  s.handle(declare_corpus());
  for (const auto& c : bench_cases()) {
    for (const char* fill : {"zeros", "ones", "random"}) {
      Json req{{"id", 9}, {"op", "run_kernel"}, {"kernel", c.kernel}};
      req["args"] = Json::array({Json{{"t", "array2d<f64>"}, {"rows", 7}, {"cols", 7}, {"fill", fill}, {"seed", 4}}});
      const Json slow = reply(s, req.dump());
      req["op"] = "jit_kernel";
      const Json fast = reply(s, req.dump());
      REQUIRE(slow["ok"] == true);
      REQUIRE(fast["ok"] == true);
      CHECK(slow["value"]["t"] == "f64");
      const double expect = oracle_case(c.kernel, *make_array(fill, 7, 4));
      CHECK(agree(Scalar{slow["value"]["v"].get<double>()}, Scalar{expect}));
      CHECK(agree(Scalar{fast["value"]["v"].get<double>()}, Scalar{expect}));
    }
  }
}

TEST_CASE("malformed requests get structured errors") {
  Session s;
  const Json bad_json = reply(s, "{not json");
  CHECK(bad_json["id"].is_null());
  CHECK(bad_json["code"] == "BadRequest");
  const Json no_id = reply(s, R"({"op":"stats"})");
  CHECK(no_id["id"].is_null());
  CHECK(no_id["ok"] == false);
  const Json float_id = reply(s, R"({"id":1.5,"op":"stats"})");
  CHECK(float_id["id"].is_null());
  const Json no_op = reply(s, R"({"id":4})");
  CHECK(no_op["id"] == 4);
  CHECK(no_op["code"] == "BadRequest");
  const Json missing_field = reply(s, R"({"id":5,"op":"reflect","entity":"x"})");
  CHECK(missing_field["id"] == 5);
  CHECK(missing_field["code"] == "BadRequest");
  const Json not_found = reply(s, R"({"id":6,"op":"reflect","entity":"x","kind":"TYPE","format":"STRING"})");
  CHECK(not_found["code"] == "NotFound");
  CHECK(not_found.size() == 4);
  CHECK_FALSE(s.finished());
}

TEST_CASE("shutdown ends the session") {
  std::istringstream in(
      "{\"id\":1,\"op\":\"stats\"}\n\n{\"id\":2,\"op\":\"shutdown\"}\n{\"id\":3,\"op\":\"stats\"}\n");
  std::ostringstream out;
  serve_stream(in, out);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 2);
  CHECK(lines[1] == R"({"id":2,"ok":true})");
}

TEST_CASE("property: encode/decode round-trips every value exactly") {
  Engine engine;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 2000; ++i) {
    std::vector<Scalar> values = {
        Scalar{(bits(rng) & 1) != 0},
        Scalar{static_cast<std::int32_t>(bits(rng))},
        Scalar{static_cast<std::int64_t>(bits(rng))},
    };
    // Arbitrary bit patterns cover subnormals, infinities and NaNs too.
    const std::uint64_t b64 = bits(rng);
    double d;
    std::memcpy(&d, &b64, sizeof d);
    const auto b32 = static_cast<std::uint32_t>(bits(rng));
    float f;
    std::memcpy(&f, &b32, sizeof f);
    values.push_back(Scalar{d});
    values.push_back(Scalar{f});
    for (const auto& v : values) {
      const std::string wire = encode_value(engine, box(v)).dump();
      const Scalar back = decode_value(Json::parse(wire)).scalar();
      REQUIRE(back.index() == v.index());
      const bool same = std::visit(
          [&](auto x) {
            using T = decltype(x);
            const T y = std::get<T>(back);
            if constexpr (std::is_floating_point_v<T>) {
              if (std::isnan(x)) return std::isnan(y);
              return x == y && std::signbit(x) == std::signbit(y);
            } else {
              return x == y;
            }
          },
          v);
      CHECK_MESSAGE(same, wire);
    }
  }
  const ArrayPtr a = make_array("random", 5, 9);
  const BoxedValue back = decode_value(Json::parse(encode_value(engine, box(a)).dump()));
  CHECK(back.array()->data() == a->data());
  CHECK(back.array()->rows() == 5);
}

TEST_CASE("decode_value rejects bad values") {
  auto code = [](const char* text) {
    try {
      decode_value(Json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::SyntaxError;
  };
  CHECK(code(R"({"t":"i32","v":2147483648})") == ErrorCode::BadRequest);
  CHECK(code(R"({"t":"i64","v":1.5})") == ErrorCode::BadRequest);
  CHECK(code(R"({"t":"bool","v":1})") == ErrorCode::BadRequest);
  CHECK(code(R"({"t":"f64","v":"big"})") == ErrorCode::BadRequest);
  CHECK(code(R"({"t":"void","v":0})") == ErrorCode::BadRequest);
  CHECK(code(R"({"v":0})") == ErrorCode::BadRequest);
  CHECK(code(R"(7)") == ErrorCode::BadRequest);
  CHECK(code(R"({"t":"array2d<f64>","rows":2,"cols":2,"data":[1,2,3]})") == ErrorCode::BadRequest);
  CHECK(code(R"({"t":"array2d<f64>","rows":-1,"cols":2,"fill":"zeros"})") == ErrorCode::BadRequest);
  CHECK(code(R"({"t":"array2d<f64>","rows":1,"cols":2,"fill":"twos"})") == ErrorCode::BadRequest);
}

namespace {

class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    ok_ = fd_ >= 0 && ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  }
  ~Client() {
    if (fd_ >= 0) ::close(fd_);
  }
  bool ok() const { return ok_; }

  std::string request(const std::string& line) {
    const std::string msg = line + "\n";
    if (::send(fd_, msg.data(), msg.size(), 0) != static_cast<ssize_t>(msg.size())) return {};
    for (;;) {
      const auto nl = pending_.find('\n');
      if (nl != std::string::npos) {
        std::string out = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        return out;
      }
      char buf[4096];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) return {};
      pending_.append(buf, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  bool ok_ = false;
  std::string pending_;
};

}  // namespace

TEST_CASE("tcp transport: sessions per connection, shutdown stops the server") {
  TcpServer server(0);
  REQUIRE(server.port() != 0);
  std::thread loop([&] { server.run(); });
  {
    Client first(server.port());
    REQUIRE(first.ok());
    CHECK(Json::parse(first.request(declare_corpus()))["ok"] == true);
    CHECK(first.request(R"({"id":1,"op":"invoke","target":"add42","args":[{"t":"i64","v":0}]})") ==
          R"({"id":1,"ok":true,"value":{"t":"i64","v":42}})");
  }
  {
    // A new connection starts from an empty engine.
    Client second(server.port());
    REQUIRE(second.ok());
    CHECK(Json::parse(second.request(R"({"id":2,"op":"invoke","target":"add42"})"))["code"] == "NotFound");
    CHECK(second.request(R"({"id":3,"op":"shutdown"})") == R"({"id":3,"ok":true})");
  }
  loop.join();
}
