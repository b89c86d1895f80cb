#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mirto/client.hpp"
#include "mirto/clock.hpp"
#include "mirto/rng.hpp"
#include "mirto/sim.hpp"
#include "mirto/trace.hpp"

namespace mirto {

inline constexpr double kControlTickS = 0.02;

// Ground-truth pose source for trace rows; empty function = no pose columns
// (real hardware).
using PoseFn = std::function<std::optional<Pose>()>;

struct MotorCommand {
  int left{0};
  int right{0};
  friend bool operator==(const MotorCommand&, const MotorCommand&) = default;
};

// v when strictly above threshold, else 0.
int clamp_ir(int v, int threshold = 45);

struct BangBangConfig {
  int threshold{45};
  int turn_power{115};
};

// Decision for one IR triple: either start a search (all sensors off the
// line) or drive with fixed powers. Sensors are ordered left, middle, right.
struct BangBangDecision {
  bool search{false};
  MotorCommand motors;
  friend bool operator==(const BangBangDecision&, const BangBangDecision&) = default;
};
BangBangDecision bang_bang_decision(const std::array<int, 3>& ir,
                                    const BangBangConfig& config);

// Controller gains plus persistent error terms. The proportional setpoint
// (2800) and the integral accumulation offset (2000) differ on purpose;
// --symmetric in the CLI sets both to 2000.
struct PidState {
  double kp{0.05};
  double kd{0.045};
  double ki{0.007};
  int base_speed{150};
  double setpoint{2800};
  std::array<double, 3> weights{0, 2000, 4000};
  double integral_band{400};
  double integral_offset{2000};
  int ir_threshold{45};
  double old_error{0};
  double sum_error{0};
};

struct PidStepResult {
  int correction{0};
  MotorCommand motors;  // raw command, not clamped to the motor range
  PidState next;
};
PidStepResult pid_step(const std::array<int, 3>& ir, const PidState& state);

// Uniformly selects one action without executing any of them; the caller
// applies the returned reference. Throws std::invalid_argument when empty.
template <typename Action, std::size_t Extent>
Action& pick_random_action(std::span<Action, Extent> actions, Rng& rng) {
  if (actions.empty()) {
    throw std::invalid_argument("pick_random_action: empty action list");
  }
  return actions[rng.next_index(actions.size())];
}

struct ExploreConfig {
  int forward_power{115};
  double backoff_s{0.5};
  double rotation_min_s{0.3};
  double rotation_max_s{1.5};
  std::uint64_t seed{0};
  int bump_report_ms{50};
};

struct ExploreResult {
  Trace trace;
  std::vector<double> rotations_s;  // completed rotation durations
  int bumps{0};
};

// Forward until a bump, reverse for backoff_s, rotate a random side for a
// random duration, repeat. Motors are stopped on every exit path.
ExploreResult run_explore(ClientSession& session, Clock& clock,
                          const ExploreConfig& config, double duration_s,
                          const PoseFn& pose = {});
ExploreResult run_explore(ClientSession& session, Clock& clock,
                          const ExploreConfig& config, double duration_s,
                          Rng& rng, const PoseFn& pose = {});

struct IrPrintout {
  std::int64_t t_ms{0};
  std::array<int, 3> ir{};
};
struct BumpEdge {
  std::int64_t t_ms{0};
  int side{0};  // 0=left, 1=right
  bool pressed{false};
};
struct MonitorResult {
  Trace trace;
  std::vector<IrPrintout> prints;
  std::vector<BumpEdge> edges;
  std::int64_t exit_t_ms{0};
  bool both_bumps_exit{false};
};

// Reports all three IR values every interval_ms, emits one edge per bump
// transition, and exits when both bumpers are pressed together (or at
// max_duration_s).
MonitorResult run_monitor(ClientSession& session, Clock& clock,
                          int interval_ms, double max_duration_s,
                          const PoseFn& pose = {});

enum class SearchOutcome { found, lost };

// Alternating creep sweeps bounded by encoder ticks: reset counts, drive
// (p,p) until a sensor finds the line or either |count| reaches tick_limit,
// then reverse (with a doubled bound, so the scan covers both sides of the
// start heading). Gives up (lost) after max_sweeps sweeps.
SearchOutcome search_maneuver(ClientSession& session, Clock& clock,
                              const BangBangConfig& config, int tick_limit = 16,
                              int max_sweeps = 4, Trace* trace = nullptr,
                              const PoseFn& pose = {});

enum class FollowMode { bangbang, pid };

struct LineFollowResult {
  Trace trace;
  PidState final_pid;
  int searches{0};
};

LineFollowResult run_line_follower(ClientSession& session, Clock& clock,
                                   FollowMode mode, double duration_s,
                                   const PidState& pid = {},
                                   const BangBangConfig& bang = {},
                                   const PoseFn& pose = {});

// Number of elements equal to 1.
std::size_t count_high_pins(std::span<const int> levels);

// Sum of the log entries strictly greater than threshold.
double sum_ir_greater_than(double threshold, std::span<const double> log);

// Appends all three IR readings every interval_ms for duration_s; returned
// oldest-first, sensor order 0,1,2 within a sample.
std::vector<int> log_ir_samples(ClientSession& session, Clock& clock,
                                int interval_ms, double duration_s);

}  // namespace mirto
