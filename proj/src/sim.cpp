#include "mirto/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mirto/rng.hpp"

namespace mirto {

namespace {

constexpr double kContactEps = 1e-9;
// Contact bearing bands, relative to the heading: a touch within +/-15deg
// presses both switches; beyond that, only the near side up to 90deg.
constexpr double kBumpBothRad = 15.0 * std::numbers::pi / 180.0;
constexpr double kBumpSideRad = 90.0 * std::numbers::pi / 180.0;

double clearance(double x, double y, const WorldModel& world) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& seg : world.obstacles) {
    best = std::min(best, point_segment_distance(x, y, seg));
  }
  return best;
}

double uniform_noise(std::uint64_t seed, std::uint64_t step, int index,
                     double amplitude) {
  if (amplitude == 0) return 0;
  std::uint64_t h = splitmix64(splitmix64(seed ^ (step * 3 + static_cast<std::uint64_t>(index))));
  double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
  return (2.0 * unit - 1.0) * amplitude;
}

}  // namespace

void SimConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) {
      throw std::invalid_argument(std::string(name) + " must be positive");
    }
  };
  positive(dt, "dt");
  positive(max_wheel_speed, "max_wheel_speed");
  positive(wheel_base, "wheel_base");
  positive(wheel_diameter, "wheel_diameter");
  positive(static_cast<double>(ticks_per_rev), "ticks_per_rev");
  positive(robot_radius, "robot_radius");
  positive(ir_sensor_radius, "ir_sensor_radius");
  if (dt > 0.02) {
    throw std::invalid_argument("dt must be <= 0.02");
  }
}

void WorldModel::validate() const {
  if (has_track()) {
    if (track.size() < 2) {
      throw std::invalid_argument("track polyline needs at least 2 points");
    }
    if (!(track_width > 0)) {
      throw std::invalid_argument("track width must be positive");
    }
  }
  if (ir_noise < 0 || ir_noise > 100) {
    throw std::invalid_argument("ir noise amplitude must be in [0,100]");
  }
}

WorldModel parse_world(std::string_view text) {
  WorldModel world;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("world line " + std::to_string(lineno) + ": " +
                                what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word == "track") {
      double w;
      if (!(ls >> w)) fail("track needs a width");
      world.track_width = w;
      double x, y;
      while (ls >> x >> y) {
        world.track.push_back({x, y});
      }
      if (world.track.size() < 2) fail("track needs at least 2 points");
    } else if (word == "obstacle") {
      Segment s;
      if (!(ls >> s.ax >> s.ay >> s.bx >> s.by)) {
        fail("obstacle needs 4 coordinates");
      }
      world.obstacles.push_back(s);
    } else if (word == "start") {
      if (!(ls >> world.start.x >> world.start.y >> world.start.theta)) {
        fail("start needs x y theta");
      }
    } else if (word == "noise") {
      if (!(ls >> world.ir_noise)) fail("noise needs an amplitude");
    } else {
      fail("unknown item '" + word + "'");
    }
  }
  world.validate();
  return world;
}

WorldModel load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open world file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_world(buf.str());
}

double point_segment_distance(double px, double py, const Segment& s) {
  double vx = s.bx - s.ax;
  double vy = s.by - s.ay;
  double wx = px - s.ax;
  double wy = py - s.ay;
  double c1 = vx * wx + vy * wy;
  if (c1 <= 0) return std::hypot(px - s.ax, py - s.ay);
  double c2 = vx * vx + vy * vy;
  if (c2 <= c1) return std::hypot(px - s.bx, py - s.by);
  double t = c1 / c2;
  return std::hypot(px - (s.ax + t * vx), py - (s.ay + t * vy));
}

double track_distance(double px, double py, const WorldModel& world) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < world.track.size(); ++i) {
    Segment s{world.track[i][0], world.track[i][1], world.track[i + 1][0],
              world.track[i + 1][1]};
    best = std::min(best, point_segment_distance(px, py, s));
  }
  return best;
}

RobotState step_sim(const RobotState& state, const WorldModel& world,
                    const SimConfig& config, double dt) {
  if (!(dt > 0)) {
    throw std::invalid_argument("step_sim: dt must be positive");
  }
  RobotState next = state;

  double v_left = state.power_left / 255.0 * config.max_wheel_speed;
  double v_right = state.power_right / 255.0 * config.max_wheel_speed;
  double v = (v_left + v_right) / 2.0;
  double omega = (v_right - v_left) / config.wheel_base;

  double dx = v * std::cos(state.theta) * dt;
  double dy = v * std::sin(state.theta) * dt;

  // Motion into an obstacle is clamped at body-circle contact. The largest
  // collision-free fraction of the translation is found by bisection, which
  // is exact enough at <= 1 cm per step.
  double scale = 1.0;
  if (!world.obstacles.empty() && (dx != 0 || dy != 0)) {
    auto clear = [&](double t) {
      return clearance(state.x + dx * t, state.y + dy * t, world) >=
             config.robot_radius - kContactEps;
    };
    if (!clear(1.0)) {
      double lo = 0.0, hi = 1.0;
      for (int i = 0; i < 40; ++i) {
        double mid = (lo + hi) / 2.0;
        if (clear(mid)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      scale = lo;
    }
  }
  next.x = state.x + dx * scale;
  next.y = state.y + dy * scale;
  next.theta = state.theta + omega * dt;

  // slip-free encoders: wheels follow the commanded surface speed even when
  // the chassis is blocked
  double circumference = std::numbers::pi * config.wheel_diameter;
  next.enc_acc_left += v_left * dt / circumference * config.ticks_per_rev;
  next.enc_acc_right += v_right * dt / circumference * config.ticks_per_rev;
  next.encoder_left = static_cast<std::int32_t>(std::llround(next.enc_acc_left));
  next.encoder_right =
      static_cast<std::int32_t>(std::llround(next.enc_acc_right));

  next.bump_left = false;
  next.bump_right = false;
  for (const auto& seg : world.obstacles) {
    if (point_segment_distance(next.x, next.y, seg) >
        config.robot_radius + 1e-6) {
      continue;
    }
    // bearing of the contact point in the robot frame
    double vx = seg.bx - seg.ax;
    double vy = seg.by - seg.ay;
    double wx = next.x - seg.ax;
    double wy = next.y - seg.ay;
    double c2 = vx * vx + vy * vy;
    double t = c2 > 0 ? std::clamp((vx * wx + vy * wy) / c2, 0.0, 1.0) : 0.0;
    double cx = seg.ax + t * vx;
    double cy = seg.ay + t * vy;
    double bearing = std::remainder(
        std::atan2(cy - next.y, cx - next.x) - next.theta,
        2.0 * std::numbers::pi);
    if (bearing > -kBumpBothRad && bearing < kBumpSideRad) {
      next.bump_left = true;
    }
    if (bearing < kBumpBothRad && bearing > -kBumpSideRad) {
      next.bump_right = true;
    }
  }

  next.step_count = state.step_count + 1;
  return next;
}

double sample_ir(const RobotState& state, const WorldModel& world,
                 const SimConfig& config, int index) {
  if (index < 0 || index > 2) {
    throw std::out_of_range("sample_ir: index must be 0..2");
  }
  double value = 0;
  if (world.has_track()) {
    const auto& off = config.ir_offsets[static_cast<std::size_t>(index)];
    double c = std::cos(state.theta);
    double s = std::sin(state.theta);
    double sx = state.x + c * off[0] - s * off[1];
    double sy = state.y + s * off[0] + c * off[1];
    double d = track_distance(sx, sy, world);
    double r = config.ir_sensor_radius;
    double lo = world.track_width / 2.0 - r;
    double hi = world.track_width / 2.0 + r;
    if (d <= lo) {
      value = 100.0;
    } else if (d >= hi) {
      value = 0.0;
    } else {
      value = 100.0 * (hi - d) / (2.0 * r);
    }
  }
  value += uniform_noise(config.rng_seed, state.step_count, index,
                         world.ir_noise);
  return std::clamp(value, 0.0, 100.0);
}

}  // namespace mirto
