#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace mirto {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TransportKind { loopback, tcp, serial };

struct TransportEndpoint {
  TransportKind kind{TransportKind::tcp};
  std::string address;  // "host:port", device path ("/dev/...[@baud]"), or loopback name
  int read_timeout_ms{1000};

  // Accepts "tcp:host:port", "serial:/dev/path[@baud]", "loopback:name",
  // plus bare "host:port" and bare "/dev/..." forms.
  static TransportEndpoint parse(std::string_view spec);
};

// Newline-delimited message channel. One concurrent reader plus one
// concurrent writer; send_line is atomic per line.
class Connection {
 public:
  virtual ~Connection() = default;
  // line must not contain the terminator; '\n' is appended on the wire
  virtual void send_line(std::string_view line) = 0;
  // One complete line without terminator, or nullopt on timeout.
  // timeout_ms 0 polls without blocking.
  virtual std::optional<std::string> recv_line(int timeout_ms) = 0;
  virtual void close() = 0;  // idempotent
  virtual bool is_open() const = 0;
};

using ConnectionPtr = std::shared_ptr<Connection>;

// Paired in-memory endpoints with lossless FIFO delivery.
std::pair<ConnectionPtr, ConnectionPtr> make_loopback_pair();

// Opens the client side of an endpoint. For loopback, two opens of the same
// address rendezvous into a pair (first call blocks nobody; it parks one end
// under the name until the peer claims it).
ConnectionPtr open_connection(const TransportEndpoint& endpoint);

// Device-side TCP helper: bind/listen, then accept a single peer.
class TcpListener {
 public:
  TcpListener(const std::string& host, int port);  // port 0 picks a free port
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  int port() const { return port_; }
  ConnectionPtr accept(int timeout_ms);  // nullptr on timeout

 private:
  int fd_{-1};
  int port_{0};
};

// Reassembles '\n'-framed lines from an arbitrarily chunked byte stream.
// Tolerates and strips '\r' before the terminator.
class LineFramer {
 public:
  explicit LineFramer(std::size_t max_line = 4096);
  void feed(std::string_view bytes);  // throws TransportError past max_line
  std::optional<std::string> next();
  bool has_partial() const { return !buffer_.empty(); }

 private:
  std::size_t max_line_;
  std::string buffer_;
  std::deque<std::string> ready_;
};

}  // namespace mirto
