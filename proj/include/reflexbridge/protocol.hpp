// protocol.hpp - newline-delimited JSON request/reply server.
//
// Each request is one JSON object on one line with an integer `id` and an
// `op`; each reply is one line echoing the id:
//
//   {"id":1,"op":"reflect","entity":"add42","kind":"IS_TEMPLATE","format":"STRING"}
//   {"id":1,"ok":true,"value":"true"}
//
// Failures reply {"id":N,"ok":false,"error":message,"code":ErrorCode}; an
// unknown op replies {"id":N,"ok":false,"error":"unknown op"}. Values carry
// type tags, e.g. {"t":"i64","v":7}. See README for every op's schema.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "reflexbridge/ast.hpp"
#include "reflexbridge/engine.hpp"
#include "reflexbridge/value.hpp"

namespace reflexbridge {

using Json = nlohmann::ordered_json;

/// Tagged wire encoding of a boxed value. Non-finite floats encode as the
/// strings "nan", "inf" and "-inf".
Json encode_value(const Engine& engine, const BoxedValue& v);

/// Decodes `{"t":"f64","v":1.5}` or an array
/// `{"t":"array2d<f64>","rows":R,"cols":C,"data":[...]}` /
/// `{"t":"array2d<f64>","rows":R,"cols":C,"fill":"zeros"|"ones"|"random","seed":S}`.
/// Throws BadRequest.
BoxedValue decode_value(const Json& j);

/// Instantiation statistics and runtime counters, as the `stats` op reports
/// them. With `reset`, both are zeroed afterwards.
Json stats_json(Engine& engine, bool reset = false);

/// One client session: an engine plus the kernels declared on it.
class Session {
 public:
  Session();
  ~Session();

  /// Handles one request line and returns the reply line (no newline).
  std::string handle(std::string_view line);

  /// True once a shutdown request has been answered.
  bool finished() const { return finished_; }

  Engine& engine() { return *engine_; }

 private:
  struct KernelCache;
  Json dispatch(const std::string& op, const Json& req);

  std::unique_ptr<Engine> engine_;
  std::map<std::string, KernelAST> kernels_;
  std::unique_ptr<KernelCache> cache_;
  bool finished_ = false;
};

/// Serves one session over a pair of streams until end of input or shutdown.
void serve_stream(std::istream& in, std::ostream& out);

/// Loopback TCP server. Connections are served one at a time, each with a
/// fresh session; a shutdown request stops the server.
class TcpServer {
 public:
  /// Binds 127.0.0.1:`port` (0 picks a free port). Throws BadRequest on failure.
  explicit TcpServer(std::uint16_t port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  void run();

 private:
  bool serve_connection(int fd);

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace reflexbridge
