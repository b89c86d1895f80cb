#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>

#include "mirto/clock.hpp"
#include "mirto/protocol.hpp"
#include "mirto/sim.hpp"
#include "mirto/transport.hpp"

namespace mirto {

// ASIP device emulator: speaks the wire protocol on the device side of a
// connection, advancing the simulation one fixed step at a time. Commands
// are drained at step boundaries; autoreports are emitted in virtual time.
// Parse errors are answered with "!parse-error:<offset>".
class Emulator {
 public:
  Emulator(ConnectionPtr device_end, WorldModel world, SimConfig config);

  // Lock-step service loop driven by a VirtualTimeline (deterministic; the
  // peer clock must be a VirtualClock on the same timeline). Emits a
  // "!sync:<ms>" marker after reaching each requested target. Returns when
  // the timeline stops or the peer closes.
  void run_virtual(VirtualTimeline& timeline);

  // Wall-clock paced loop for tcp/serial endpoints. Returns when `stop`
  // becomes true or the peer closes.
  void run_wall(const std::atomic<bool>& stop);

  RobotState snapshot() const;
  std::int64_t now_ms() const;

 private:
  struct Schedule {
    int interval_ms{0};
    std::int64_t next_ms{0};
  };

  bool drain_commands();  // false once the connection is gone
  void handle_line(const std::string& line);
  void apply(const AsipMessage& msg);
  void step_once();
  void emit_due_reports();
  void send(const AsipMessage& msg);

  ConnectionPtr conn_;
  WorldModel world_;
  SimConfig config_;
  int dt_ms_;

  mutable std::mutex mu_;
  RobotState state_;
  std::int64_t now_ms_{0};

  Schedule analog_;
  Schedule ir_;
  Schedule bump_;
  Schedule encoder_;
  std::array<int, 16> pin_modes_{};
  std::array<int, 16> digital_levels_{};
};

// Binds the endpoint (device side), accepts one client, and serves it with
// wall-clock pacing until the client disconnects or *stop becomes true.
void run_emulator(const TransportEndpoint& endpoint, const WorldModel& world,
                  const SimConfig& config,
                  const std::atomic<bool>* stop = nullptr);

}  // namespace mirto
