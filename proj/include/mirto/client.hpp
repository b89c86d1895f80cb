#pragma once

#include <atomic>
#include <array>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <thread>

#include "mirto/protocol.hpp"
#include "mirto/transport.hpp"

namespace mirto {

inline constexpr int kMaxAnalogPins = 16;
inline constexpr int kNumIrSensors = 3;

using LogFn = std::function<void(std::string_view)>;

// Client-side mirror of device state. Slots are individually atomic; no
// cross-slot snapshot is promised to concurrent readers.
class PinCache {
 public:
  PinCache();

  std::int32_t analog(int pin) const;
  std::int32_t digital(int pin) const;
  int ir(int index) const;  // clamped to [0,100] on ingest
  std::int32_t encoder(int wheel) const;
  bool bump_left() const { return bump_left_.load(std::memory_order_relaxed); }
  bool bump_right() const { return bump_right_.load(std::memory_order_relaxed); }

  void set_analog(int pin, std::int32_t v);
  void set_digital(int pin, std::int32_t v);
  void set_ir(int index, std::int32_t v);
  void set_encoder(int wheel, std::int32_t v);
  void set_bumps(bool left, bool right);
  void zero();

  struct Snapshot {
    std::array<std::int32_t, kMaxAnalogPins> analog{};
    std::array<std::int32_t, kMaxAnalogPins> digital{};
    std::array<int, kNumIrSensors> ir{};
    std::array<std::int32_t, 2> encoder{};
    bool bump_left{false};
    bool bump_right{false};
    friend bool operator==(const Snapshot&, const Snapshot&) = default;
  };
  Snapshot snapshot() const;

 private:
  std::array<std::atomic<std::int32_t>, kMaxAnalogPins> analog_;
  std::array<std::atomic<std::int32_t>, kMaxAnalogPins> digital_;
  std::array<std::atomic<std::int32_t>, kNumIrSensors> ir_;
  std::array<std::atomic<std::int32_t>, 2> encoder_;
  std::atomic<bool> bump_left_{false};
  std::atomic<bool> bump_right_{false};
};

// Writes each (pin,value) pair of an analog report into the cache. Reports
// naming a pin >= 16 are dropped whole with a logged protocol error;
// out-of-range values are clamped with a logged warning.
void process_analog_values(PinCache& cache, const AnalogReport& report,
                           const LogFn& log = {});

// Dispatches any device event into the cache (analog/digital/ir/bump/
// encoder); debug and raw events never touch it. Returns true when the
// cache was updated.
bool apply_event(PinCache& cache, const AsipMessage& msg, const LogFn& log = {});

struct SessionOptions {
  std::int64_t settle_ms{500};  // grace after enabling autoreports
  LogFn log;                    // defaults to stderr
};

// ASIP client: one background ingestion thread owns the connection's read
// side and folds events into the cache; commands may be issued from one
// behavior thread.
class ClientSession {
 public:
  explicit ClientSession(ConnectionPtr conn, SessionOptions options = {});
  explicit ClientSession(const TransportEndpoint& endpoint,
                         SessionOptions options = {});
  ~ClientSession();
  ClientSession(const ClientSession&) = delete;
  ClientSession& operator=(const ClientSession&) = delete;

  // commands
  void set_pin_mode(int pin, int mode);
  void digital_write(int pin, int level);
  void digital_write_all(std::span<const int> pins, int level);
  void enable_analog(int interval_ms);
  void enable_ir(int interval_ms);
  void enable_bumpers(int interval_ms);
  void set_motors(int left, int right);  // contract-guarded, [-255,255]
  void stop_motors();
  void reset_count(int wheel);  // also zeroes the cached slot

  // non-blocking cache reads
  int ir_value(int index) const;             // 0..2
  std::int32_t encoder_count(int wheel) const;  // 0..1
  bool left_bump() const;
  bool right_bump() const;
  PinCache& cache() { return cache_; }
  const PinCache& cache() const { return cache_; }

  std::int64_t settle_ms() const { return options_.settle_ms; }
  std::int64_t last_event_at_ms() const;  // wall ms of last ingested event
  std::int64_t protocol_errors() const;

  // virtual-time support: blocks until the device's "!sync:<ms>" marker for
  // at least `ms` has been ingested
  std::int64_t last_sync_ms() const;
  void wait_sync(std::int64_t ms);

  void close();
  bool is_open() const;

 private:
  void send(const AsipMessage& msg);
  void ingest_loop();

  ConnectionPtr conn_;
  SessionOptions options_;
  PinCache cache_;
  std::atomic<bool> running_{false};
  std::atomic<std::int64_t> last_event_at_ms_{0};
  std::atomic<std::int64_t> protocol_errors_{0};
  std::atomic<std::int64_t> last_sync_ms_{0};
  mutable std::mutex sync_mu_;
  std::condition_variable sync_cv_;
  std::function<void(int, int)> guarded_set_motors_;
  std::thread reader_;
};

}  // namespace mirto
