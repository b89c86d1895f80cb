#include "mirto/clock.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mirto {

namespace {
std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
// Generous wall-clock bound on how long a virtual advance may take before
// the device is considered dead.
constexpr std::int64_t kStallTimeoutMs = 60000;
}  // namespace

WallClock::WallClock() : epoch_ms_(steady_ms()) {}

std::int64_t WallClock::now_ms() const { return steady_ms() - epoch_ms_; }

void WallClock::sleep_s(double seconds) {
  if (seconds <= 0) return;
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

VirtualTimeline::VirtualTimeline(int step_ms) : step_ms_(step_ms) {
  if (step_ms <= 0) {
    throw std::invalid_argument("VirtualTimeline: step_ms must be positive");
  }
}

void VirtualTimeline::advance_target(std::int64_t by_ms) {
  {
    std::lock_guard lk(mu_);
    target_ += by_ms;
  }
  cv_.notify_all();
}

void VirtualTimeline::wait_current(std::int64_t ms) {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, std::chrono::milliseconds(kStallTimeoutMs),
               [&] { return current_ >= ms || stopped_; });
  if (current_ >= ms) return;
  throw std::runtime_error(stopped_ ? "virtual timeline stopped"
                                    : "virtual device stalled");
}

std::int64_t VirtualTimeline::current_ms() const {
  std::lock_guard lk(mu_);
  return current_;
}

std::int64_t VirtualTimeline::target_ms() const {
  std::lock_guard lk(mu_);
  return target_;
}

void VirtualTimeline::stop() {
  {
    std::lock_guard lk(mu_);
    stopped_ = true;
  }
  cv_.notify_all();
}

bool VirtualTimeline::wait_work() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return target_ > current_ || stopped_; });
  return !stopped_;
}

void VirtualTimeline::publish(std::int64_t current_ms) {
  {
    std::lock_guard lk(mu_);
    current_ = current_ms;
  }
  cv_.notify_all();
}

bool VirtualTimeline::stopped() const {
  std::lock_guard lk(mu_);
  return stopped_;
}

VirtualClock::VirtualClock(VirtualTimeline& timeline,
                           std::function<void(std::int64_t)> after_advance)
    : timeline_(timeline), after_advance_(std::move(after_advance)) {}

std::int64_t VirtualClock::now_ms() const { return logical_ms_; }

void VirtualClock::sleep_s(double seconds) {
  if (seconds < 0) {
    throw std::invalid_argument("sleep_s: negative duration");
  }
  auto steps = static_cast<std::int64_t>(
      std::llround(seconds * 1000.0 / timeline_.step_ms()));
  if (steps <= 0) return;
  std::int64_t by = steps * timeline_.step_ms();
  logical_ms_ += by;
  timeline_.advance_target(by);
  timeline_.wait_current(logical_ms_);
  if (after_advance_) after_advance_(logical_ms_);
}

}  // namespace mirto
