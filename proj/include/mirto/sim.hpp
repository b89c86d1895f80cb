#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mirto {

struct Pose {
  double x{0};
  double y{0};
  double theta{0};
};

// Chassis-frame convention: +x forward, +y left, theta counterclockwise.
// Positive wheel power drives that wheel forward; the wire-level mirror of
// the left motor is applied at the emulator boundary, not here.
struct RobotState {
  double x{0};
  double y{0};
  double theta{0};
  int power_left{0};
  int power_right{0};
  std::int32_t encoder_left{0};
  std::int32_t encoder_right{0};
  bool bump_left{false};
  bool bump_right{false};
  // fractional tick accumulators behind the published integer counts
  double enc_acc_left{0};
  double enc_acc_right{0};
  std::uint64_t step_count{0};
};

struct SimConfig {
  double dt{0.01};               // seconds per step
  double max_wheel_speed{0.5};   // m/s at power 255
  double wheel_base{0.11};       // m
  double wheel_diameter{0.06};   // m
  int ticks_per_rev{128};
  double robot_radius{0.08};     // m, body circle for obstacle contact
  // sensor positions in the robot frame; index 0 is the left sensor
  std::array<std::array<double, 2>, 3> ir_offsets{
      {{0.08, 0.03}, {0.08, 0.0}, {0.08, -0.03}}};
  double ir_sensor_radius{0.006};  // falloff half-width at the band edge
  int encoder_report_ms{20};       // encoder reports have no enable command
  std::uint64_t rng_seed{0};

  void validate() const;  // throws std::invalid_argument
};

struct Segment {
  double ax{0}, ay{0}, bx{0}, by{0};
};

struct WorldModel {
  std::vector<std::array<double, 2>> track;  // polyline; empty = no line
  double track_width{0};
  std::vector<Segment> obstacles;
  Pose start;
  double ir_noise{0};  // uniform +/- amplitude on IR samples, 0-100 scale

  bool has_track() const { return !track.empty(); }
  void validate() const;
};

// World file format, one item per line, '#' comments:
//   track <width> x1 y1 x2 y2 ...
//   obstacle x1 y1 x2 y2
//   start x y theta
//   noise <amplitude>
WorldModel parse_world(std::string_view text);
WorldModel load_world(const std::string& path);

double point_segment_distance(double px, double py, const Segment& s);
double track_distance(double px, double py, const WorldModel& world);

// One fixed step of the differential-drive model: linear power-to-speed map,
// unicycle pose integration, slip-free encoder accumulation, and obstacle
// contact (motion clamped at the body circle, bump flags from front-arc
// contact bearing).
RobotState step_sim(const RobotState& state, const WorldModel& world,
                    const SimConfig& config, double dt);

// Reflectance of sensor `index` in [0,100]: 100 inside the track band,
// linear falloff across one sensor radius either side of the band edge
// (exactly 50 when centered on the edge), plus seeded per-step noise.
double sample_ir(const RobotState& state, const WorldModel& world,
                 const SimConfig& config, int index);

}  // namespace mirto
