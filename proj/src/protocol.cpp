#include "reflexbridge/protocol.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "reflexbridge/dyn_runtime.hpp"
#include "reflexbridge/executor.hpp"
#include "reflexbridge/lowerer.hpp"
#include "reflexbridge/parser.hpp"
#include "reflexbridge/reflex.hpp"
#include "reflexbridge/specializer.hpp"

namespace reflexbridge {

namespace {

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorCode::BadRequest, message); }

const Json& field(const Json& req, const char* name) {
  auto it = req.find(name);
  if (it == req.end()) bad(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const Json& req, const char* name) {
  const Json& v = field(req, name);
  if (!v.is_string()) bad(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const Json& req, const char* name) {
  if (!req.contains(name)) return std::nullopt;
  return string_field(req, name);
}

bool optional_bool(const Json& req, const char* name) {
  auto it = req.find(name);
  if (it == req.end()) return false;
  if (!it->is_boolean()) bad(std::string("field '") + name + "' must be a boolean");
  return it->get<bool>();
}

Json encode_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double decode_float(const Json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  bad("expected a number");
}

template <class T>
T decode_int(const Json& v) {
  if (!v.is_number_integer()) bad("expected an integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) bad("integer out of range");
    return static_cast<T>(u);
  }
  const auto i = v.get<std::int64_t>();
  if (i < std::numeric_limits<T>::min() || i > std::numeric_limits<T>::max()) bad("integer out of range");
  return static_cast<T>(i);
}

std::size_t decode_dim(const Json& req, const char* name) {
  const auto d = decode_int<std::int64_t>(field(req, name));
  if (d < 0) bad(std::string("field '") + name + "' must be non-negative");
  return static_cast<std::size_t>(d);
}

BoxedValue decode_array(const Json& j) {
  const std::size_t rows = decode_dim(j, "rows");
  const std::size_t cols = decode_dim(j, "cols");
  if (j.contains("data")) {
    const Json& data = field(j, "data");
    if (!data.is_array()) bad("field 'data' must be an array");
    std::vector<double> values;
    values.reserve(data.size());
    for (const auto& x : data) values.push_back(decode_float(x));
    if (values.size() != rows * cols) bad("array data has the wrong number of elements");
    return box(std::make_shared<const Array2D>(rows, cols, std::move(values)));
  }
  const std::string fill = string_field(j, "fill");
  if (fill == "zeros") return box(std::make_shared<const Array2D>(Array2D::zeros(rows, cols)));
  if (fill == "ones") return box(std::make_shared<const Array2D>(Array2D::ones(rows, cols)));
  if (fill == "random") {
    const auto seed = j.contains("seed") ? decode_int<std::int64_t>(j["seed"]) : 0;
    return box(std::make_shared<const Array2D>(Array2D::random(rows, cols, static_cast<std::uint64_t>(seed))));
  }
  bad("unknown array fill '" + fill + "'");
}

std::vector<BoxedValue> decode_args(const Json& req) {
  std::vector<BoxedValue> out;
  if (!req.contains("args")) return out;
  const Json& args = req["args"];
  if (!args.is_array()) bad("field 'args' must be an array");
  for (const auto& a : args) out.push_back(decode_value(a));
  return out;
}

Json encode_reply(const Engine& engine, const ReflexReply& reply) {
  return std::visit(
      [&](const auto& r) -> Json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Truth>) {
          return r.value;
        } else if constexpr (std::is_same_v<T, Text>) {
          return r.value;
        } else if constexpr (std::is_same_v<T, TypeRef>) {
          return Json{{"type", render_type(r)}};
        } else if constexpr (std::is_same_v<T, TypeList>) {
          Json types = Json::array();
          for (const auto& t : r.value) types.push_back(render_type(t));
          return Json{{"types", types}};
        } else if constexpr (std::is_same_v<T, EntityHandle>) {
          return Json{{"entity", to_underlying(r.value)}, {"name", engine.entity(r.value).qualified_name}};
        } else if constexpr (std::is_same_v<T, Count>) {
          return r.value;
        } else {
          return Json{{"callable", r.value}};
        }
      },
      reply);
}

Json error_reply(const Json& id, const Error& e) {
  std::string message = e.message();
  if (e.span()) message = std::to_string(e.span()->line) + ":" + std::to_string(e.span()->column) + ": " + message;
  Json r;
  r["id"] = id;
  r["ok"] = false;
  r["error"] = message;
  r["code"] = error_code_name(e.code());
  return r;
}

TypeRef arg_type(const BoxedValue& v) { return v.type(); }

std::string signature_key(const std::string& kernel, const std::vector<TypeRef>& types) {
  return kernel + "(" + render_types(types) + ")";
}

}  // namespace

Json stats_json(Engine& engine, bool reset) {
  const RuntimeCounters counters = engine.counters();
  const InstantiationStats s = stats(engine, reset);
  Json per = Json::object();
  for (const auto& [tmpl, n] : s.per_template) per[engine.entity(tmpl).qualified_name] = n;
  return Json{{"total_instantiations", s.total_instantiations},
              {"cache_hits", s.cache_hits},
              {"node_count", s.node_count},
              {"per_template", per},
              {"order_log", s.order_log},
              {"counters",
               Json{{"resolutions", counters.resolutions},
                    {"boxings", counters.boxings},
                    {"unboxings", counters.unboxings},
                    {"invocations", counters.invocations}}}};
}

Json encode_value(const Engine& engine, const BoxedValue& v) {
  Json j;
  switch (v.tag()) {
    case BoxTag::Bool:
    case BoxTag::I32:
    case BoxTag::I64:
    case BoxTag::F32:
    case BoxTag::F64:
      j["t"] = box_tag_name(v.tag());
      std::visit(
          [&](auto x) {
            if constexpr (std::is_floating_point_v<decltype(x)>) {
              j["v"] = encode_float(static_cast<double>(x));
            } else {
              j["v"] = x;
            }
          },
          v.scalar());
      return j;
    case BoxTag::Arr: {
      const Array2D& a = *v.array();
      j["t"] = "array2d<f64>";
      j["rows"] = a.rows();
      j["cols"] = a.cols();
      Json data = Json::array();
      for (double x : a.data()) data.push_back(encode_float(x));
      j["data"] = std::move(data);
      return j;
    }
    case BoxTag::Inst: {
      const Instance& inst = *v.instance();
      j["t"] = render_type(inst.type);
      Json slots = Json::object();
      for (EntityId m : engine.data_members(inst.cls)) {
        const std::string& name = engine.entity(m).name;
        slots[name] = encode_value(engine, inst.slots.at(name));
      }
      j["slots"] = std::move(slots);
      return j;
    }
  }
  return j;
}

BoxedValue decode_value(const Json& j) {
  if (!j.is_object()) bad("a value must be an object with a type tag");
  const std::string t = string_field(j, "t");
  if (t == "array2d<f64>" || t == "array2d") return decode_array(j);
  const auto kind = builtin_kind(t);
  if (!kind || *kind == TypeKind::Void) bad("unknown value tag '" + t + "'");
  const Json& v = field(j, "v");
  switch (*kind) {
    case TypeKind::Bool:
      if (!v.is_boolean()) bad("bool value must be true or false");
      return box(Scalar{v.get<bool>()});
    case TypeKind::I32: return box(Scalar{decode_int<std::int32_t>(v)});
    case TypeKind::I64: return box(Scalar{decode_int<std::int64_t>(v)});
    case TypeKind::F32: return box(Scalar{static_cast<float>(decode_float(v))});
    default: return box(Scalar{decode_float(v)});
  }
}

struct Session::KernelCache {
  std::map<std::string, std::pair<TypedIR, std::unique_ptr<LoadedKernel>>> loaded;
};

Session::Session() : engine_(std::make_unique<Engine>()), cache_(std::make_unique<KernelCache>()) {}

Session::~Session() = default;

std::string Session::handle(std::string_view line) {
  Json id = nullptr;
  Json reply;
  try {
    Json req;
    try {
      req = Json::parse(line);
    } catch (const Json::parse_error&) {
      bad("malformed request");
    }
    if (!req.is_object()) bad("request must be an object");
    if (req.contains("id")) id = req["id"];
    if (!id.is_number_integer()) {
      id = nullptr;
      bad("request needs an integer id");
    }
    const std::string op = string_field(req, "op");
    static const char* const kOps[] = {"declare",    "reflect",    "list_members", "invoke",
                                       "run_kernel", "jit_kernel", "stats",        "shutdown"};
    bool known = false;
    for (const char* k : kOps) known |= op == k;
    if (!known) {
      reply["id"] = id;
      reply["ok"] = false;
      reply["error"] = "unknown op";
      return reply.dump();
    }
    Json body = dispatch(op, req);
    reply["id"] = id;
    reply["ok"] = true;
    for (auto& [k, v] : body.items()) reply[k] = std::move(v);
  } catch (const Error& e) {
    reply = error_reply(id, e);
  } catch (const Json::exception& e) {
    reply = error_reply(id, Error(ErrorCode::BadRequest, e.what()));
  }
  return reply.dump();
}

Json Session::dispatch(const std::string& op, const Json& req) {
  Engine& engine = *engine_;
  Json out;
  if (op == "declare") {
    const auto source = optional_string(req, "source");
    const auto kernels = optional_string(req, "kernels");
    if (!source && !kernels) bad("declare needs 'source' or 'kernels'");
    std::vector<KernelAST> parsed;
    if (kernels) {
      parsed = parse_kernels(*kernels);
      for (const auto& k : parsed) {
        if (kernels_.count(k.name)) throw Error(ErrorCode::Redefinition, "kernel '" + k.name + "' already declared");
      }
    }
    Json entities = Json::array();
    if (source) {
      for (EntityId id : parse_translation_unit(engine, *source)) entities.push_back(engine.entity(id).qualified_name);
    }
    Json names = Json::array();
    for (auto& k : parsed) {
      names.push_back(k.name);
      kernels_.emplace(k.name, std::move(k));
    }
    cache_->loaded.clear();
    out["value"] = Json{{"entities", entities}, {"kernels", names}};
  } else if (op == "reflect") {
    const std::string entity = string_field(req, "entity");
    const std::string kind_name = string_field(req, "kind");
    const std::string format_name = string_field(req, "format");
    const auto kind = parse_reflex_kind(kind_name);
    if (!kind) bad("unknown reflection kind '" + kind_name + "'");
    const auto format = parse_reflex_format(format_name);
    if (!format) bad("unknown reflection format '" + format_name + "'");
    std::size_t index = 0;
    if (req.contains("index")) {
      const auto i = decode_int<std::int64_t>(req["index"]);
      if (i < 0) throw Error(ErrorCode::IndexOutOfRange, "overload index must be non-negative");
      index = static_cast<std::size_t>(i);
    }
    out["value"] = encode_reply(engine, cpp_reflex(engine, engine.lookup(entity).id, *kind, *format, index));
  } else if (op == "list_members") {
    Json members = Json::array();
    for (const auto& [name, id] : list_members(engine, engine.lookup(string_field(req, "entity")).id)) {
      members.push_back(Json{{"name", name}, {"id", to_underlying(id)}});
    }
    out["value"] = std::move(members);
  } else if (op == "invoke") {
    const EntityId target = engine.lookup(string_field(req, "target")).id;
    std::optional<std::vector<TypeRef>> targs;
    if (req.contains("targs")) {
      const Json& list = req["targs"];
      if (!list.is_array()) bad("field 'targs' must be an array");
      targs.emplace();
      for (const auto& t : list) {
        if (!t.is_string()) bad("template arguments must be type strings");
        targs->push_back(parse_type(t.get<std::string>(), engine));
      }
    }
    out["value"] = encode_value(engine, dyn_call(engine, target, decode_args(req), targs));
  } else if (op == "run_kernel" || op == "jit_kernel") {
    const std::string name = string_field(req, "kernel");
    auto it = kernels_.find(name);
    if (it == kernels_.end()) throw Error(ErrorCode::NotFound, "no kernel named '" + name + "'");
    const auto args = decode_args(req);
    if (op == "run_kernel") {
      out["value"] = encode_value(engine, run_kernel_dynamic(engine, it->second, args));
    } else {
      std::vector<TypeRef> types;
      std::vector<NativeValue> native;
      for (const auto& a : args) {
        if (a.tag() == BoxTag::Inst) throw Error(ErrorCode::TagMismatch, "kernels take scalars and arrays");
        types.push_back(arg_type(a));
        native.push_back(unbox_native(a));
      }
      const std::string key = signature_key(name, types);
      auto hit = cache_->loaded.find(key);
      if (hit == cache_->loaded.end()) {
        TypedIR ir = lower(engine, type_kernel(engine, it->second, types));
        auto loaded = std::make_unique<LoadedKernel>(engine, ir);
        hit = cache_->loaded.emplace(key, std::make_pair(std::move(ir), std::move(loaded))).first;
      }
      out["value"] = encode_value(engine, box(hit->second.second->run(native)));
      if (optional_bool(req, "dump_ir")) out["ir"] = dump_ir(hit->second.first);
    }
  } else if (op == "stats") {
    out["value"] = stats_json(engine, optional_bool(req, "reset"));
  } else {
    finished_ = true;
  }
  return out;
}

void serve_stream(std::istream& in, std::ostream& out) {
  Session session;
  std::string line;
  while (!session.finished() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out << session.handle(line) << '\n';
    out.flush();
  }
}

TcpServer::TcpServer(std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) bad(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 4) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    bad("cannot listen on port " + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::run() {
  for (;;) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    const bool stop = serve_connection(fd);
    ::close(fd);
    if (stop) return;
  }
}

bool TcpServer::serve_connection(int fd) {
  Session session;
  std::string pending;
  char buf[4096];
  auto send_all = [fd](const std::string& s) {
    std::size_t sent = 0;
    while (sent < s.size()) {
      const ssize_t n = ::send(fd, s.data() + sent, s.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) {
        if (n < 0 && errno == EINTR) continue;
        return false;
      }
      sent += static_cast<std::size_t>(n);
    }
    return true;
  };
  for (;;) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    pending.append(buf, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = pending.find('\n')) != std::string::npos) {
      std::string line = pending.substr(0, nl);
      pending.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      if (!send_all(session.handle(line) + "\n")) return false;
      if (session.finished()) return true;
    }
  }
}

}  // namespace reflexbridge
