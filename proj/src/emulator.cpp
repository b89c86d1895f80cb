#include "mirto/emulator.hpp"

#include <chrono>
#include <cmath>
#include <thread>

namespace mirto {

namespace {
std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

Emulator::Emulator(ConnectionPtr device_end, WorldModel world, SimConfig config)
    : conn_(std::move(device_end)),
      world_(std::move(world)),
      config_(config) {
  config_.validate();
  world_.validate();
  dt_ms_ = static_cast<int>(std::llround(config_.dt * 1000.0));
  state_.x = world_.start.x;
  state_.y = world_.start.y;
  state_.theta = world_.start.theta;
  // encoder reports have no enable command; they are on from the start
  encoder_.interval_ms = config_.encoder_report_ms;
  encoder_.next_ms = encoder_.interval_ms;
}

RobotState Emulator::snapshot() const {
  std::lock_guard lk(mu_);
  return state_;
}

std::int64_t Emulator::now_ms() const {
  std::lock_guard lk(mu_);
  return now_ms_;
}

void Emulator::send(const AsipMessage& msg) {
  conn_->send_line(encode(msg));
}

bool Emulator::drain_commands() {
  while (true) {
    std::optional<std::string> line;
    try {
      line = conn_->recv_line(0);
    } catch (const TransportError&) {
      return false;
    }
    if (!line) return true;
    handle_line(*line);
  }
}

void Emulator::handle_line(const std::string& line) {
  AsipMessage msg;
  try {
    msg = decode(line);
  } catch (const ParseError& e) {
    send(DebugEvent{"parse-error:" + std::to_string(e.offset())});
    return;
  }
  apply(msg);
}

void Emulator::apply(const AsipMessage& msg) {
  std::lock_guard lk(mu_);
  if (const auto* mode = std::get_if<SetPinMode>(&msg)) {
    pin_modes_[static_cast<std::size_t>(mode->pin)] = mode->mode;
  } else if (const auto* wr = std::get_if<DigitalWrite>(&msg)) {
    digital_levels_[static_cast<std::size_t>(wr->pin)] = wr->value;
  } else if (const auto* analog = std::get_if<AnalogAutoreport>(&msg)) {
    analog_.interval_ms = analog->interval_ms;
    analog_.next_ms = now_ms_ + analog->interval_ms;
  } else if (const auto* ir = std::get_if<IrAutoreport>(&msg)) {
    ir_.interval_ms = ir->interval_ms;
    ir_.next_ms = now_ms_ + ir->interval_ms;
  } else if (const auto* bump = std::get_if<BumpAutoreport>(&msg)) {
    bump_.interval_ms = bump->interval_ms;
    bump_.next_ms = now_ms_ + bump->interval_ms;
  } else if (const auto* motors = std::get_if<SetMotors>(&msg)) {
    // The wire convention mirrors the left motor: forward is (-p, +p).
    state_.power_left = -motors->left;
    state_.power_right = motors->right;
  } else if (const auto* reset = std::get_if<ResetEncoder>(&msg)) {
    if (reset->wheel == 0) {
      state_.enc_acc_left = 0;
      state_.encoder_left = 0;
    } else {
      state_.enc_acc_right = 0;
      state_.encoder_right = 0;
    }
  }
  // events, debug, and raw lines from the peer are ignored
}

void Emulator::step_once() {
  std::lock_guard lk(mu_);
  state_ = step_sim(state_, world_, config_, config_.dt);
  now_ms_ += dt_ms_;
}

void Emulator::emit_due_reports() {
  RobotState s;
  std::int64_t now;
  {
    std::lock_guard lk(mu_);
    s = state_;
    now = now_ms_;
  }

  auto due = [&](Schedule& sched) {
    if (sched.interval_ms <= 0 || now < sched.next_ms) return false;
    while (sched.next_ms <= now) sched.next_ms += sched.interval_ms;
    return true;
  };

  if (due(ir_)) {
    ReportMap values;
    for (int i = 0; i < 3; ++i) {
      values.push_back(
          {i, static_cast<std::int32_t>(
                  std::llround(sample_ir(s, world_, config_, i)))});
    }
    send(IrReport{std::move(values)});
  }
  if (due(bump_)) {
    send(BumpReport{{{0, s.bump_left ? 1 : 0}, {1, s.bump_right ? 1 : 0}}});
  }
  if (due(encoder_)) {
    send(EncoderReport{{{0, s.encoder_left}, {1, s.encoder_right}}});
  }
  if (due(analog_)) {
    // analog pins 0..2 mirror the IR sensors on the 10-bit ADC scale
    ReportMap pins;
    for (int i = 0; i < 3; ++i) {
      double ir = sample_ir(s, world_, config_, i);
      pins.push_back(
          {i, static_cast<std::int32_t>(std::llround(ir / 100.0 * 1023.0))});
    }
    send(AnalogReport{std::move(pins)});
  }
}

void Emulator::run_virtual(VirtualTimeline& timeline) {
  if (timeline.step_ms() != dt_ms_) {
    throw std::invalid_argument("timeline step does not match sim dt");
  }
  while (timeline.wait_work()) {
    std::int64_t target = timeline.target_ms();
    while (now_ms_ < target) {
      if (!drain_commands()) return;
      step_once();
      try {
        emit_due_reports();
      } catch (const TransportError&) {
        return;
      }
    }
    try {
      send(DebugEvent{"sync:" + std::to_string(now_ms_)});
    } catch (const TransportError&) {
      return;
    }
    timeline.publish(now_ms_);
  }
}

void Emulator::run_wall(const std::atomic<bool>& stop) {
  std::int64_t next_step = steady_ms() + dt_ms_;
  while (!stop && conn_->is_open()) {
    std::int64_t wait = next_step - steady_ms();
    if (wait > 0) {
      std::optional<std::string> line;
      try {
        line = conn_->recv_line(static_cast<int>(wait));
      } catch (const TransportError&) {
        return;
      }
      if (line) handle_line(*line);
      continue;
    }
    if (!drain_commands()) return;
    step_once();
    try {
      emit_due_reports();
    } catch (const TransportError&) {
      return;
    }
    next_step += dt_ms_;
  }
}

void run_emulator(const TransportEndpoint& endpoint, const WorldModel& world,
                  const SimConfig& config, const std::atomic<bool>* stop) {
  static const std::atomic<bool> never{false};
  const std::atomic<bool>& stop_flag = stop ? *stop : never;

  ConnectionPtr conn;
  if (endpoint.kind == TransportKind::tcp) {
    auto colon = endpoint.address.rfind(':');
    if (colon == std::string::npos) {
      throw TransportError("tcp endpoint must be host:port");
    }
    TcpListener listener(endpoint.address.substr(0, colon),
                         std::stoi(endpoint.address.substr(colon + 1)));
    while (!conn) {
      if (stop_flag) return;
      conn = listener.accept(200);
    }
  } else {
    conn = open_connection(endpoint);
  }
  Emulator emulator(conn, world, config);
  emulator.run_wall(stop_flag);
  conn->close();
}

}  // namespace mirto
