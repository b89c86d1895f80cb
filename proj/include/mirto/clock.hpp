#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>

namespace mirto {

// Time source for control loops: wall clock against hardware, virtual clock
// against the simulator.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
  virtual void sleep_s(double seconds) = 0;
};

class WallClock : public Clock {
 public:
  WallClock();
  std::int64_t now_ms() const override;
  void sleep_s(double seconds) override;

 private:
  std::int64_t epoch_ms_;
};

// Rendezvous between one control thread and one simulated-device thread.
// The control side moves the target forward; the device side steps the
// simulation until it catches up and publishes its progress.
class VirtualTimeline {
 public:
  explicit VirtualTimeline(int step_ms = 10);
  int step_ms() const { return step_ms_; }

  // control side
  void advance_target(std::int64_t by_ms);
  void wait_current(std::int64_t ms);  // throws on device stall or stop
  std::int64_t current_ms() const;
  std::int64_t target_ms() const;
  void stop();

  // device side
  bool wait_work();  // false once stopped
  void publish(std::int64_t current_ms);
  bool stopped() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::int64_t current_{0};
  std::int64_t target_{0};
  int step_ms_;
  bool stopped_{false};
};

// Clock that advances a VirtualTimeline. Sleeps are quantized to whole
// simulation steps. after_advance runs once the device has caught up
// (typically a wait for the client session to ingest the device's sync
// marker, making cache reads deterministic after sleep returns).
class VirtualClock : public Clock {
 public:
  explicit VirtualClock(VirtualTimeline& timeline,
                        std::function<void(std::int64_t)> after_advance = {});
  std::int64_t now_ms() const override;
  void sleep_s(double seconds) override;

 private:
  VirtualTimeline& timeline_;
  std::function<void(std::int64_t)> after_advance_;
  std::int64_t logical_ms_{0};
};

}  // namespace mirto
