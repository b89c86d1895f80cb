#include "mirto/client.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "mirto/contracts.hpp"

namespace mirto {

namespace {

std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void log_to(const LogFn& log, const std::string& msg) {
  if (log) {
    log(msg);
  } else {
    std::fprintf(stderr, "mirto: %s\n", msg.c_str());
  }
}

std::int32_t clamp_value(std::int32_t v, std::int32_t lo, std::int32_t hi,
                         const char* what, const LogFn& log) {
  if (v < lo || v > hi) {
    log_to(log, std::string("clamped out-of-range ") + what + " value " +
                    std::to_string(v));
    return v < lo ? lo : hi;
  }
  return v;
}

constexpr std::int64_t kSyncStallMs = 60000;

}  // namespace

PinCache::PinCache() { zero(); }

std::int32_t PinCache::analog(int pin) const {
  if (pin < 0 || pin >= kMaxAnalogPins) {
    throw std::out_of_range("analog pin out of range");
  }
  return analog_[static_cast<std::size_t>(pin)].load(std::memory_order_relaxed);
}

std::int32_t PinCache::digital(int pin) const {
  if (pin < 0 || pin >= kMaxAnalogPins) {
    throw std::out_of_range("digital pin out of range");
  }
  return digital_[static_cast<std::size_t>(pin)].load(std::memory_order_relaxed);
}

int PinCache::ir(int index) const {
  if (index < 0 || index >= kNumIrSensors) {
    throw std::out_of_range("ir index out of range");
  }
  return ir_[static_cast<std::size_t>(index)].load(std::memory_order_relaxed);
}

std::int32_t PinCache::encoder(int wheel) const {
  if (wheel < 0 || wheel > 1) {
    throw std::out_of_range("wheel index out of range");
  }
  return encoder_[static_cast<std::size_t>(wheel)].load(std::memory_order_relaxed);
}

void PinCache::set_analog(int pin, std::int32_t v) {
  analog_[static_cast<std::size_t>(pin)].store(v, std::memory_order_relaxed);
}
void PinCache::set_digital(int pin, std::int32_t v) {
  digital_[static_cast<std::size_t>(pin)].store(v, std::memory_order_relaxed);
}
void PinCache::set_ir(int index, std::int32_t v) {
  ir_[static_cast<std::size_t>(index)].store(v, std::memory_order_relaxed);
}
void PinCache::set_encoder(int wheel, std::int32_t v) {
  encoder_[static_cast<std::size_t>(wheel)].store(v, std::memory_order_relaxed);
}
void PinCache::set_bumps(bool left, bool right) {
  bump_left_.store(left, std::memory_order_relaxed);
  bump_right_.store(right, std::memory_order_relaxed);
}

void PinCache::zero() {
  for (auto& a : analog_) a.store(0, std::memory_order_relaxed);
  for (auto& d : digital_) d.store(0, std::memory_order_relaxed);
  for (auto& i : ir_) i.store(0, std::memory_order_relaxed);
  for (auto& e : encoder_) e.store(0, std::memory_order_relaxed);
  bump_left_.store(false, std::memory_order_relaxed);
  bump_right_.store(false, std::memory_order_relaxed);
}

PinCache::Snapshot PinCache::snapshot() const {
  Snapshot s;
  for (int i = 0; i < kMaxAnalogPins; ++i) {
    s.analog[static_cast<std::size_t>(i)] = analog(i);
    s.digital[static_cast<std::size_t>(i)] = digital(i);
  }
  for (int i = 0; i < kNumIrSensors; ++i) {
    s.ir[static_cast<std::size_t>(i)] = ir(i);
  }
  s.encoder[0] = encoder(0);
  s.encoder[1] = encoder(1);
  s.bump_left = bump_left();
  s.bump_right = bump_right();
  return s;
}

void process_analog_values(PinCache& cache, const AnalogReport& report,
                           const LogFn& log) {
  for (const auto& pv : report.pins) {
    if (pv.index >= kMaxAnalogPins) {
      log_to(log, "protocol error: analog report names pin " +
                      std::to_string(pv.index) + "; message dropped");
      return;
    }
  }
  for (const auto& pv : report.pins) {
    cache.set_analog(pv.index, clamp_value(pv.value, 0, 1023, "analog", log));
  }
}

bool apply_event(PinCache& cache, const AsipMessage& msg, const LogFn& log) {
  if (const auto* analog = std::get_if<AnalogReport>(&msg)) {
    process_analog_values(cache, *analog, log);
    return true;
  }
  if (const auto* digital = std::get_if<DigitalReport>(&msg)) {
    for (const auto& pv : digital->pins) {
      if (pv.index >= kMaxAnalogPins) {
        log_to(log, "protocol error: digital report names pin " +
                        std::to_string(pv.index) + "; message dropped");
        return false;
      }
    }
    for (const auto& pv : digital->pins) {
      cache.set_digital(pv.index, clamp_value(pv.value, 0, 1, "digital", log));
    }
    return true;
  }
  if (const auto* ir = std::get_if<IrReport>(&msg)) {
    for (const auto& pv : ir->values) {
      if (pv.index >= kNumIrSensors) {
        log_to(log, "protocol error: IR report names sensor " +
                        std::to_string(pv.index) + "; message dropped");
        return false;
      }
    }
    for (const auto& pv : ir->values) {
      cache.set_ir(pv.index, clamp_value(pv.value, 0, 100, "ir", log));
    }
    return true;
  }
  if (const auto* bump = std::get_if<BumpReport>(&msg)) {
    bool left = cache.bump_left();
    bool right = cache.bump_right();
    for (const auto& pv : bump->values) {
      if (pv.index > 1) {
        log_to(log, "protocol error: bump report names switch " +
                        std::to_string(pv.index) + "; message dropped");
        return false;
      }
    }
    for (const auto& pv : bump->values) {
      (pv.index == 0 ? left : right) = pv.value != 0;
    }
    cache.set_bumps(left, right);
    return true;
  }
  if (const auto* enc = std::get_if<EncoderReport>(&msg)) {
    for (const auto& pv : enc->counts) {
      if (pv.index > 1) {
        log_to(log, "protocol error: encoder report names wheel " +
                        std::to_string(pv.index) + "; message dropped");
        return false;
      }
    }
    for (const auto& pv : enc->counts) {
      cache.set_encoder(pv.index, pv.value);
    }
    return true;
  }
  return false;  // debug, raw, and command echoes never touch the cache
}

ClientSession::ClientSession(ConnectionPtr conn, SessionOptions options)
    : conn_(std::move(conn)), options_(std::move(options)) {
  if (!conn_) {
    throw TransportError("openSession: null connection");
  }
  guarded_set_motors_ = guard(
      "setMotors",
      [](int left, int right) {
        return left >= -255 && left <= 255 && right >= -255 && right <= 255;
      },
      [] { return true; },
      [this](int left, int right) { send(SetMotors{left, right}); });
  running_ = true;
  reader_ = std::thread([this] { ingest_loop(); });
}

ClientSession::ClientSession(const TransportEndpoint& endpoint,
                             SessionOptions options)
    : ClientSession(open_connection(endpoint), std::move(options)) {}

ClientSession::~ClientSession() { close(); }

void ClientSession::send(const AsipMessage& msg) {
  conn_->send_line(encode(msg));
}

void ClientSession::set_pin_mode(int pin, int mode) {
  send(SetPinMode{pin, mode});
}

void ClientSession::digital_write(int pin, int level) {
  send(DigitalWrite{pin, level});
}

void ClientSession::digital_write_all(std::span<const int> pins, int level) {
  for (int pin : pins) {
    digital_write(pin, level);
  }
}

void ClientSession::enable_analog(int interval_ms) {
  if (interval_ms < 0) throw std::invalid_argument("negative interval");
  send(AnalogAutoreport{interval_ms});
}

void ClientSession::enable_ir(int interval_ms) {
  if (interval_ms < 0) throw std::invalid_argument("negative interval");
  send(IrAutoreport{interval_ms});
}

void ClientSession::enable_bumpers(int interval_ms) {
  if (interval_ms < 0) throw std::invalid_argument("negative interval");
  send(BumpAutoreport{interval_ms});
}

void ClientSession::set_motors(int left, int right) {
  guarded_set_motors_(left, right);
}

void ClientSession::stop_motors() { set_motors(0, 0); }

void ClientSession::reset_count(int wheel) {
  if (wheel < 0 || wheel > 1) {
    throw std::out_of_range("reset_count: wheel must be 0 or 1");
  }
  send(ResetEncoder{wheel});
  cache_.set_encoder(wheel, 0);
}

int ClientSession::ir_value(int index) const { return cache_.ir(index); }

std::int32_t ClientSession::encoder_count(int wheel) const {
  return cache_.encoder(wheel);
}

bool ClientSession::left_bump() const { return cache_.bump_left(); }
bool ClientSession::right_bump() const { return cache_.bump_right(); }

std::int64_t ClientSession::last_event_at_ms() const {
  return last_event_at_ms_.load(std::memory_order_relaxed);
}

std::int64_t ClientSession::protocol_errors() const {
  return protocol_errors_.load(std::memory_order_relaxed);
}

std::int64_t ClientSession::last_sync_ms() const {
  return last_sync_ms_.load(std::memory_order_acquire);
}

void ClientSession::wait_sync(std::int64_t ms) {
  std::unique_lock lk(sync_mu_);
  bool ok = sync_cv_.wait_for(lk, std::chrono::milliseconds(kSyncStallMs), [&] {
    return last_sync_ms_.load(std::memory_order_acquire) >= ms || !running_;
  });
  if (last_sync_ms_.load(std::memory_order_acquire) >= ms) return;
  throw TransportError(ok ? "session closed before sync"
                          : "device sync stalled");
}

void ClientSession::close() {
  if (!running_.exchange(false)) {
    return;
  }
  conn_->close();
  if (reader_.joinable()) reader_.join();
  sync_cv_.notify_all();
}

bool ClientSession::is_open() const {
  return running_ && conn_->is_open();
}

void ClientSession::ingest_loop() {
  while (running_) {
    std::optional<std::string> line;
    try {
      line = conn_->recv_line(50);
    } catch (const TransportError&) {
      break;  // peer gone or connection closed under us
    }
    if (!line) continue;
    last_event_at_ms_.store(steady_ms(), std::memory_order_relaxed);
    AsipMessage msg;
    try {
      msg = decode(*line);
    } catch (const ParseError& e) {
      protocol_errors_.fetch_add(1, std::memory_order_relaxed);
      log_to(options_.log, "dropped unparseable event: " + std::string(e.what()));
      continue;
    }
    if (const auto* dbg = std::get_if<DebugEvent>(&msg)) {
      constexpr std::string_view kSyncPrefix = "sync:";
      if (dbg->text.rfind(kSyncPrefix, 0) == 0) {
        std::int64_t t = 0;
        const char* first = dbg->text.data() + kSyncPrefix.size();
        const char* last = dbg->text.data() + dbg->text.size();
        if (std::from_chars(first, last, t).ec == std::errc{}) {
          {
            std::lock_guard lk(sync_mu_);
            last_sync_ms_.store(t, std::memory_order_release);
          }
          sync_cv_.notify_all();
        }
      }
      continue;
    }
    apply_event(cache_, msg, options_.log);
  }
  {
    std::lock_guard lk(sync_mu_);
    running_ = false;
  }
  sync_cv_.notify_all();
}

}  // namespace mirto
