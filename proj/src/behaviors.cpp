#include "mirto/behaviors.hpp"

#include <algorithm>
#include <cmath>

#include "mirto/contracts.hpp"

namespace mirto {

namespace {

std::array<int, 3> read_ir(const ClientSession& session) {
  return {session.ir_value(0), session.ir_value(1), session.ir_value(2)};
}

TraceRecord make_record(Clock& clock, ClientSession& session,
                        MotorCommand cmd, const PoseFn& pose) {
  TraceRecord r;
  r.t_ms = clock.now_ms();
  r.power_left = cmd.left;
  r.power_right = cmd.right;
  auto ir = read_ir(session);
  r.ir0 = ir[0];
  r.ir1 = ir[1];
  r.ir2 = ir[2];
  r.bump_left = session.left_bump();
  r.bump_right = session.right_bump();
  if (pose) {
    if (auto p = pose()) {
      r.x = p->x;
      r.y = p->y;
      r.theta = p->theta;
    }
  }
  return r;
}

void append_record(Trace& trace, TraceRecord r) {
  if (!trace.empty() && r.t_ms <= trace.back().t_ms) {
    throw std::logic_error("trace timestamps must be strictly increasing");
  }
  trace.push_back(std::move(r));
}

int clamp_power(int p) { return std::clamp(p, -255, 255); }

// Stops the motors no matter how the behavior unwinds.
class MotorStopGuard {
 public:
  explicit MotorStopGuard(ClientSession& session) : session_(session) {}
  ~MotorStopGuard() {
    try {
      session_.stop_motors();
    } catch (...) {
      // the connection may already be gone; nothing better to do
    }
  }

 private:
  ClientSession& session_;
};

}  // namespace

int clamp_ir(int v, int threshold) { return v > threshold ? v : 0; }

BangBangDecision bang_bang_decision(const std::array<int, 3>& ir,
                                    const BangBangConfig& config) {
  const int p = config.turn_power;
  const bool a = ir[0] > config.threshold;
  const bool b = ir[1] > config.threshold;
  const bool c = ir[2] > config.threshold;

  if (!a && !b && !c) return {true, {0, 0}};
  if (a && b && c) return {false, {-p, p}};
  if (a && b && !c) return {false, {0, p}};
  if (!a && b && c) return {false, {-p, 0}};
  if (a && !b && !c) return {false, {0, p}};
  if (!a && !b && c) return {false, {-p, 0}};
  return {false, {0, 0}};
}

PidStepResult pid_step(const std::array<int, 3>& ir, const PidState& state) {
  PidStepResult out;
  out.next = state;

  double c0 = clamp_ir(ir[0], state.ir_threshold);
  double c1 = clamp_ir(ir[1], state.ir_threshold);
  double c2 = clamp_ir(ir[2], state.ir_threshold);
  double total = c0 + c1 + c2;

  double error;
  if (total > 0) {
    error = (state.weights[0] * c0 + state.weights[1] * c1 +
             state.weights[2] * c2) /
            total;
  } else {
    // line lost: remember which side it vanished on
    error = state.old_error > 2000 ? 4000 : 0;
  }

  double raw = state.kp * (error - state.setpoint) +
               state.kd * (error - state.old_error) +
               state.ki * state.sum_error;
  out.correction = static_cast<int>(std::llround(raw));

  const int base = state.base_speed;
  if (out.correction < 0) {
    out.motors = {-(base + out.correction), base};
  } else if (out.correction > 0) {
    out.motors = {-base, base - out.correction};
  } else {
    out.motors = {-base, base};
  }

  out.next.old_error = error;
  if (error > -state.integral_band && error < state.integral_band) {
    out.next.sum_error = 0;
  } else {
    out.next.sum_error = state.sum_error + (error - state.integral_offset);
  }
  return out;
}

ExploreResult run_explore(ClientSession& session, Clock& clock,
                          const ExploreConfig& config, double duration_s,
                          const PoseFn& pose) {
  Rng rng(config.seed);
  return run_explore(session, clock, config, duration_s, rng, pose);
}

ExploreResult run_explore(ClientSession& session, Clock& clock,
                          const ExploreConfig& config, double duration_s,
                          Rng& rng, const PoseFn& pose) {
  if (duration_s <= 0) {
    throw std::invalid_argument("run_explore: duration must be positive");
  }
  ExploreResult result;
  MotorStopGuard stop_guard(session);

  session.enable_bumpers(config.bump_report_ms);
  clock.sleep_s(static_cast<double>(session.settle_ms()) / 1000.0);

  const int fp = config.forward_power;
  const auto backoff_ticks =
      static_cast<int>(std::llround(config.backoff_s / kControlTickS));
  enum class Phase { forward, backward, rotate };

  // rotation directions as a list of actions picked at random, applied by
  // the caller of the picker
  int rotate_sign = 1;  // +1: wire (p,p) turns left; -1: turns right
  std::array<std::function<void()>, 2> rotations = {
      [&] { rotate_sign = 1; },
      [&] { rotate_sign = -1; },
  };

  Phase phase = Phase::forward;
  MotorCommand cmd{-fp, fp};
  session.set_motors(cmd.left, cmd.right);
  int phase_ticks_left = 0;

  const std::int64_t t_end =
      clock.now_ms() + static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
  while (clock.now_ms() < t_end) {
    append_record(result.trace, make_record(clock, session, cmd, pose));
    clock.sleep_s(kControlTickS);

    switch (phase) {
      case Phase::forward:
        if (session.left_bump() || session.right_bump()) {
          ++result.bumps;
          phase = Phase::backward;
          phase_ticks_left = backoff_ticks;
          cmd = {fp, -fp};
          session.set_motors(cmd.left, cmd.right);
        }
        break;
      case Phase::backward:
        if (--phase_ticks_left <= 0) {
          auto& rotation = pick_random_action(std::span(rotations), rng);
          rotation();
          double duration =
              rng.next_double(config.rotation_min_s, config.rotation_max_s);
          phase_ticks_left =
              static_cast<int>(std::llround(duration / kControlTickS));
          result.rotations_s.push_back(phase_ticks_left * kControlTickS);
          phase = Phase::rotate;
          cmd = {rotate_sign * fp, rotate_sign * fp};
          session.set_motors(cmd.left, cmd.right);
        }
        break;
      case Phase::rotate:
        if (--phase_ticks_left <= 0) {
          phase = Phase::forward;
          cmd = {-fp, fp};
          session.set_motors(cmd.left, cmd.right);
        }
        break;
    }
  }
  if (phase == Phase::rotate && phase_ticks_left > 0 &&
      !result.rotations_s.empty()) {
    result.rotations_s.pop_back();  // truncated rotation was never completed
  }
  return result;
}

MonitorResult run_monitor(ClientSession& session, Clock& clock,
                          int interval_ms, double max_duration_s,
                          const PoseFn& pose) {
  MonitorResult result;
  MotorStopGuard stop_guard(session);

  session.enable_ir(100);
  session.enable_bumpers(100);
  clock.sleep_s(static_cast<double>(session.settle_ms()) / 1000.0);

  bool prev_left = false;
  bool prev_right = false;
  std::int64_t t0 = clock.now_ms();
  std::int64_t last_print = t0;
  const std::int64_t t_end =
      t0 + static_cast<std::int64_t>(std::llround(max_duration_s * 1000.0));

  while (clock.now_ms() <= t_end) {
    std::int64_t now = clock.now_ms();
    if (now - last_print >= interval_ms) {
      result.prints.push_back({now, read_ir(session)});
      last_print += interval_ms;
    }

    bool left = session.left_bump();
    bool right = session.right_bump();
    if (left != prev_left) {
      result.edges.push_back({now, 0, left});
    }
    if (right != prev_right) {
      result.edges.push_back({now, 1, right});
    }
    prev_left = left;
    prev_right = right;

    append_record(result.trace, make_record(clock, session, {0, 0}, pose));

    if (left && right) {
      result.both_bumps_exit = true;
      break;
    }
    clock.sleep_s(kControlTickS);
  }
  result.exit_t_ms = clock.now_ms();
  return result;
}

SearchOutcome search_maneuver(ClientSession& session, Clock& clock,
                              const BangBangConfig& config, int tick_limit,
                              int max_sweeps, Trace* trace, const PoseFn& pose) {
  MotorStopGuard stop_guard(session);
  auto on_line = [&] {
    auto ir = read_ir(session);
    return ir[0] > config.threshold || ir[1] > config.threshold ||
           ir[2] > config.threshold;
  };
  if (on_line()) {
    return SearchOutcome::found;  // already under a sensor; no motion
  }

  const int p = config.turn_power;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    session.reset_count(0);
    session.reset_count(1);
    int dir = sweep % 2 == 0 ? 1 : -1;
    // reverse sweeps run twice as far so the scan crosses the start heading
    // and covers the other side
    int limit = sweep == 0 ? tick_limit : 2 * tick_limit;
    int tick_cap = 8 * std::max(limit, 1);
    MotorCommand cmd{dir * p, dir * p};
    session.set_motors(cmd.left, cmd.right);
    for (int tick = 0; tick < tick_cap; ++tick) {
      if (trace) {
        append_record(*trace, make_record(clock, session, cmd, pose));
      }
      clock.sleep_s(kControlTickS);
      if (on_line()) {
        return SearchOutcome::found;  // stop guard halts the motors
      }
      if (std::abs(session.encoder_count(0)) >= limit ||
          std::abs(session.encoder_count(1)) >= limit) {
        break;
      }
    }
  }
  return SearchOutcome::lost;
}

LineFollowResult run_line_follower(ClientSession& session, Clock& clock,
                                   FollowMode mode, double duration_s,
                                   const PidState& pid,
                                   const BangBangConfig& bang,
                                   const PoseFn& pose) {
  if (duration_s <= 0) {
    throw std::invalid_argument("run_line_follower: duration must be positive");
  }
  LineFollowResult result;
  result.final_pid = pid;
  MotorStopGuard stop_guard(session);

  session.enable_ir(20);  // match the control period
  clock.sleep_s(static_cast<double>(session.settle_ms()) / 1000.0);

  const std::int64_t t_end =
      clock.now_ms() + static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
  while (clock.now_ms() < t_end) {
    auto ir = read_ir(session);
    if (mode == FollowMode::bangbang) {
      auto decision = bang_bang_decision(ir, bang);
      if (decision.search) {
        ++result.searches;
        search_maneuver(session, clock, bang, 16, 4, &result.trace, pose);
        continue;
      }
      session.set_motors(decision.motors.left, decision.motors.right);
      append_record(result.trace,
                    make_record(clock, session, decision.motors, pose));
    } else {
      auto step = pid_step(ir, result.final_pid);
      // the controller's raw command can exceed the motor range during
      // integral windup; the drive stage saturates like the hardware would
      MotorCommand cmd{clamp_power(step.motors.left),
                       clamp_power(step.motors.right)};
      session.set_motors(cmd.left, cmd.right);
      auto record = make_record(clock, session, cmd, pose);
      record.error = step.next.old_error;
      record.correction = step.correction;
      append_record(result.trace, std::move(record));
      result.final_pid = step.next;
    }
    clock.sleep_s(kControlTickS);
  }
  return result;
}

std::size_t count_high_pins(std::span<const int> levels) {
  return static_cast<std::size_t>(
      std::count(levels.begin(), levels.end(), 1));
}

double sum_ir_greater_than(double threshold, std::span<const double> log) {
  double sum = 0;
  for (double v : log) {
    if (v > threshold) sum += v;
  }
  return sum;
}

std::vector<int> log_ir_samples(ClientSession& session, Clock& clock,
                                int interval_ms, double duration_s) {
  std::vector<int> samples;
  if (duration_s <= 0) return samples;
  std::int64_t t0 = clock.now_ms();
  std::int64_t last = t0;
  const std::int64_t t_end =
      t0 + static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
  while (clock.now_ms() <= t_end) {
    if (clock.now_ms() - last >= interval_ms) {
      for (int v : read_ir(session)) samples.push_back(v);
      last += interval_ms;
    }
    clock.sleep_s(kControlTickS);
  }
  return samples;
}

}  // namespace mirto
