#include "mirto/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <termios.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>

namespace mirto {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw TransportError(what + ": " + std::strerror(errno));
}

void check_no_terminator(std::string_view line) {
  if (line.find('\n') != std::string_view::npos) {
    throw TransportError("send_line: line contains a terminator");
  }
}

// ---------------------------------------------------------------- loopback

// Shared FIFO of complete lines, one direction.
struct LoopbackQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> lines;
  bool closed{false};

  void push(std::string line) {
    {
      std::lock_guard lk(mu);
      if (closed) throw TransportError("send_line: connection closed");
      lines.push_back(std::move(line));
    }
    cv.notify_all();
  }

  std::optional<std::string> pop(int timeout_ms) {
    std::unique_lock lk(mu);
    auto ready = [&] { return !lines.empty() || closed; };
    if (timeout_ms <= 0) {
      if (!ready()) return std::nullopt;
    } else {
      cv.wait_for(lk, std::chrono::milliseconds(timeout_ms), ready);
    }
    if (!lines.empty()) {
      std::string line = std::move(lines.front());
      lines.pop_front();
      return line;
    }
    if (closed) throw TransportError("recv_line: peer closed");
    return std::nullopt;
  }

  void close() {
    {
      std::lock_guard lk(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

class LoopbackConnection : public Connection {
 public:
  LoopbackConnection(std::shared_ptr<LoopbackQueue> tx,
                     std::shared_ptr<LoopbackQueue> rx)
      : tx_(std::move(tx)), rx_(std::move(rx)) {}

  ~LoopbackConnection() override { close(); }

  void send_line(std::string_view line) override {
    if (!open_) throw TransportError("send_line: connection closed");
    check_no_terminator(line);
    tx_->push(std::string(line));
  }

  std::optional<std::string> recv_line(int timeout_ms) override {
    if (!open_) throw TransportError("recv_line: connection closed");
    return rx_->pop(timeout_ms);
  }

  void close() override {
    if (open_.exchange(false)) {
      tx_->close();
      rx_->close();
    }
  }

  bool is_open() const override { return open_; }

 private:
  std::shared_ptr<LoopbackQueue> tx_;
  std::shared_ptr<LoopbackQueue> rx_;
  std::atomic<bool> open_{true};
};

struct LoopbackRegistry {
  std::mutex mu;
  std::map<std::string, ConnectionPtr> pending;
};

LoopbackRegistry& loopback_registry() {
  static LoopbackRegistry registry;
  return registry;
}

// ------------------------------------------------------------------ fd I/O

class FdConnection : public Connection {
 public:
  explicit FdConnection(int fd) : fd_(fd) {}
  ~FdConnection() override { close(); }

  void send_line(std::string_view line) override {
    check_no_terminator(line);
    std::string framed(line);
    framed += '\n';
    std::lock_guard lk(write_mu_);
    if (fd_ < 0) throw TransportError("send_line: connection closed");
    std::size_t off = 0;
    while (off < framed.size()) {
      ssize_t n = ::write(fd_, framed.data() + off, framed.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("send_line");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> recv_line(int timeout_ms) override {
    std::lock_guard lk(read_mu_);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(timeout_ms);
    while (true) {
      if (auto line = framer_.next()) return line;
      if (fd_ < 0) throw TransportError("recv_line: connection closed");
      int wait_ms = 0;
      if (timeout_ms > 0) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - std::chrono::steady_clock::now())
                        .count();
        if (left <= 0) return std::nullopt;
        wait_ms = static_cast<int>(left);
      }
      struct pollfd pfd{fd_, POLLIN, 0};
      int pr = ::poll(&pfd, 1, wait_ms);
      if (pr < 0) {
        if (errno == EINTR) continue;
        throw_errno("recv_line");
      }
      if (pr == 0) return std::nullopt;  // timeout (or nothing on a poll)
      char buf[1024];
      ssize_t n = ::read(fd_, buf, sizeof(buf));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("recv_line");
      }
      if (n == 0) {
        // EOF: drain any final complete line, then report the broken peer
        if (auto line = framer_.next()) return line;
        throw TransportError("recv_line: peer closed");
      }
      framer_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    }
  }

  void close() override {
    int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
  }

  bool is_open() const override { return fd_ >= 0; }

 private:
  std::atomic<int> fd_;
  std::mutex read_mu_;
  std::mutex write_mu_;
  LineFramer framer_;
};

int connect_tcp(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    throw TransportError("tcp endpoint must be host:port, got '" + address + "'");
  }
  std::string host = address.substr(0, colon);
  std::string port = address.substr(colon + 1);

  struct addrinfo hints {};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  struct addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) {
    throw TransportError("tcp resolve '" + address + "': " + gai_strerror(rc));
  }
  int fd = -1;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw TransportError("tcp connect '" + address + "' failed");
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

speed_t baud_constant(int baud) {
  switch (baud) {
    case 9600: return B9600;
    case 19200: return B19200;
    case 38400: return B38400;
    case 57600: return B57600;
    case 115200: return B115200;
    default:
      throw TransportError("unsupported baud rate " + std::to_string(baud));
  }
}

int open_serial(const std::string& address) {
  std::string path = address;
  int baud = 57600;  // 8N1, no flow control
  if (auto at = address.rfind('@'); at != std::string::npos) {
    path = address.substr(0, at);
    baud = std::stoi(address.substr(at + 1));
  }
  int fd = ::open(path.c_str(), O_RDWR | O_NOCTTY | O_CLOEXEC);
  if (fd < 0) {
    throw_errno("serial open '" + path + "'");
  }
  struct termios tio {};
  if (::tcgetattr(fd, &tio) == 0) {
    cfmakeraw(&tio);
    tio.c_cflag &= ~static_cast<tcflag_t>(CRTSCTS);
    tio.c_cflag |= CLOCAL | CREAD;
    tio.c_cc[VMIN] = 0;
    tio.c_cc[VTIME] = 0;
    cfsetispeed(&tio, baud_constant(baud));
    cfsetospeed(&tio, baud_constant(baud));
    ::tcsetattr(fd, TCSANOW, &tio);
  }
  return fd;
}

}  // namespace

// ---------------------------------------------------------------- framing

LineFramer::LineFramer(std::size_t max_line) : max_line_(max_line) {}

void LineFramer::feed(std::string_view bytes) {
  for (char c : bytes) {
    if (c == '\n') {
      if (!buffer_.empty() && buffer_.back() == '\r') {
        buffer_.pop_back();
      }
      ready_.push_back(std::move(buffer_));
      buffer_.clear();
      continue;
    }
    if (buffer_.size() >= max_line_) {
      buffer_.clear();
      throw TransportError("line exceeds " + std::to_string(max_line_) +
                           " bytes");
    }
    buffer_ += c;
  }
}

std::optional<std::string> LineFramer::next() {
  if (ready_.empty()) return std::nullopt;
  std::string line = std::move(ready_.front());
  ready_.pop_front();
  return line;
}

// --------------------------------------------------------------- endpoints

TransportEndpoint TransportEndpoint::parse(std::string_view spec) {
  TransportEndpoint ep;
  auto starts_with = [&](std::string_view prefix) {
    return spec.substr(0, prefix.size()) == prefix;
  };
  if (starts_with("tcp:")) {
    ep.kind = TransportKind::tcp;
    ep.address = std::string(spec.substr(4));
  } else if (starts_with("serial:")) {
    ep.kind = TransportKind::serial;
    ep.address = std::string(spec.substr(7));
  } else if (starts_with("loopback:")) {
    ep.kind = TransportKind::loopback;
    ep.address = std::string(spec.substr(9));
  } else if (!spec.empty() && spec.front() == '/') {
    ep.kind = TransportKind::serial;
    ep.address = std::string(spec);
  } else if (spec.find(':') != std::string_view::npos) {
    ep.kind = TransportKind::tcp;
    ep.address = std::string(spec);
  } else {
    throw TransportError("unrecognized endpoint '" + std::string(spec) + "'");
  }
  if (ep.address.empty()) {
    throw TransportError("endpoint '" + std::string(spec) + "' has no address");
  }
  return ep;
}

std::pair<ConnectionPtr, ConnectionPtr> make_loopback_pair() {
  auto a_to_b = std::make_shared<LoopbackQueue>();
  auto b_to_a = std::make_shared<LoopbackQueue>();
  return {std::make_shared<LoopbackConnection>(a_to_b, b_to_a),
          std::make_shared<LoopbackConnection>(b_to_a, a_to_b)};
}

ConnectionPtr open_connection(const TransportEndpoint& endpoint) {
  switch (endpoint.kind) {
    case TransportKind::loopback: {
      auto& reg = loopback_registry();
      std::lock_guard lk(reg.mu);
      auto it = reg.pending.find(endpoint.address);
      if (it != reg.pending.end()) {
        ConnectionPtr peer = std::move(it->second);
        reg.pending.erase(it);
        return peer;
      }
      auto [mine, theirs] = make_loopback_pair();
      reg.pending.emplace(endpoint.address, std::move(theirs));
      return mine;
    }
    case TransportKind::tcp:
      return std::make_shared<FdConnection>(connect_tcp(endpoint.address));
    case TransportKind::serial:
      return std::make_shared<FdConnection>(open_serial(endpoint.address));
  }
  throw TransportError("unknown transport kind");
}

TcpListener::TcpListener(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("listener socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  struct sockaddr_in addr {};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw TransportError("listener host must be an IPv4 address, got '" +
                         host + "'");
  }
  if (::bind(fd_, reinterpret_cast<struct sockaddr*>(&addr), sizeof(addr)) <
      0) {
    ::close(fd_);
    throw_errno("listener bind");
  }
  if (::listen(fd_, 1) < 0) {
    ::close(fd_);
    throw_errno("listener listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<struct sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

ConnectionPtr TcpListener::accept(int timeout_ms) {
  struct pollfd pfd{fd_, POLLIN, 0};
  int pr = ::poll(&pfd, 1, timeout_ms);
  if (pr < 0) throw_errno("listener poll");
  if (pr == 0) return nullptr;
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw_errno("listener accept");
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_shared<FdConnection>(fd);
}

}  // namespace mirto
