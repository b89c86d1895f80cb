#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mirto/rng.hpp>
#include <mirto/sim.hpp>

#include <cmath>
#include <numbers>

using namespace mirto;

namespace {

WorldModel empty_world() { return {}; }

WorldModel straight_track_world() {
  WorldModel w;
  w.track = {{-0.2, 0.0}, {10.0, 0.0}};
  w.track_width = 0.07;
  return w;
}

RobotState run_steps(RobotState s, const WorldModel& w, const SimConfig& c,
                     int n) {
  for (int i = 0; i < n; ++i) {
    s = step_sim(s, w, c, c.dt);
  }
  return s;
}

}  // namespace

TEST_CASE("zero power leaves the robot alone") {
  SimConfig cfg;
  RobotState s;
  s.x = 1;
  s.y = 2;
  s.theta = 0.5;
  auto next = step_sim(s, empty_world(), cfg, cfg.dt);
  CHECK(next.x == s.x);
  CHECK(next.y == s.y);
  CHECK(next.theta == s.theta);
  CHECK(next.encoder_left == 0);
  CHECK(next.encoder_right == 0);
}

TEST_CASE("full forward power covers max speed") {
  SimConfig cfg;
  RobotState s;
  s.power_left = 255;
  s.power_right = 255;
  auto next = step_sim(s, empty_world(), cfg, 1.0);
  CHECK(next.x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(next.y == doctest::Approx(0.0));
  CHECK(next.theta == 0.0);
}

TEST_CASE("opposite powers rotate in place and split the encoders") {
  SimConfig cfg;
  RobotState s;
  s.power_left = -255;
  s.power_right = 255;
  auto next = run_steps(s, empty_world(), cfg, 100);  // one second
  CHECK(next.x == doctest::Approx(0.0));
  CHECK(next.y == doctest::Approx(0.0));
  // omega = (0.5 - (-0.5)) / 0.11
  CHECK(next.theta == doctest::Approx(1.0 / 0.11).epsilon(1e-9));
  CHECK(next.encoder_left < 0);
  CHECK(next.encoder_right > 0);
  CHECK(next.encoder_left == -next.encoder_right);
}

TEST_CASE("encoder counts match wheel arc length within one tick") {
  SimConfig cfg;
  RobotState s;
  s.power_left = 200;
  s.power_right = 200;
  auto next = run_steps(s, empty_world(), cfg, 137);
  double v = 200.0 / 255.0 * cfg.max_wheel_speed;
  double arc = v * 137 * cfg.dt;
  double expected = arc / (std::numbers::pi * cfg.wheel_diameter) *
                    cfg.ticks_per_rev;
  CHECK(std::abs(next.encoder_left - expected) <= 1.0);
  CHECK(std::abs(next.encoder_right - expected) <= 1.0);
}

TEST_CASE("equal powers keep the heading bit-exact") {
  SimConfig cfg;
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    RobotState s;
    s.theta = rng.next_double(-3, 3);
    int p = static_cast<int>(rng.next_index(511)) - 255;
    s.power_left = p;
    s.power_right = p;
    auto next = run_steps(s, empty_world(), cfg, 200);
    REQUIRE(next.theta == s.theta);
  }
}

TEST_CASE("forward motion into a wall is clamped at body contact") {
  SimConfig cfg;
  WorldModel w;
  w.obstacles.push_back({0.5, -1.0, 0.5, 1.0});
  RobotState s;
  s.power_left = 255;
  s.power_right = 255;
  auto next = run_steps(s, w, cfg, 200);  // two seconds, 1 m of free travel
  CHECK(next.x == doctest::Approx(0.5 - cfg.robot_radius).epsilon(1e-6));
  CHECK(next.bump_left);
  CHECK(next.bump_right);
  // blocked wheels still count (slip)
  CHECK(next.encoder_left > 0);
}

TEST_CASE("off-center contact presses only the near switch") {
  SimConfig cfg;
  WorldModel w;
  // obstacle bearing ~45 degrees to the left of the heading
  w.obstacles.push_back({0.05, 0.05, 0.1, 0.1});
  RobotState s;
  s.power_left = 255;
  s.power_right = 255;
  auto next = step_sim(s, w, cfg, cfg.dt);
  CHECK(next.bump_left);
  CHECK_FALSE(next.bump_right);

  // mirrored obstacle presses the right switch
  WorldModel wr;
  wr.obstacles.push_back({0.05, -0.05, 0.1, -0.1});
  auto next_r = step_sim(s, wr, cfg, cfg.dt);
  CHECK(next_r.bump_right);
  CHECK_FALSE(next_r.bump_left);
}

TEST_CASE("no step ends inside an obstacle") {
  SimConfig cfg;
  WorldModel w;
  w.obstacles.push_back({-0.5, -0.5, 0.5, -0.5});
  w.obstacles.push_back({0.5, -0.5, 0.5, 0.5});
  w.obstacles.push_back({0.5, 0.5, -0.5, 0.5});
  w.obstacles.push_back({-0.5, 0.5, -0.5, -0.5});
  Rng rng(3);
  RobotState s;
  for (int i = 0; i < 5000; ++i) {
    if (i % 17 == 0) {
      s.power_left = static_cast<int>(rng.next_index(511)) - 255;
      s.power_right = static_cast<int>(rng.next_index(511)) - 255;
    }
    s = step_sim(s, w, cfg, cfg.dt);
    for (const auto& seg : w.obstacles) {
      REQUIRE(point_segment_distance(s.x, s.y, seg) >=
              cfg.robot_radius - 1e-9);
    }
  }
}

TEST_CASE("ir sample: plateau, edge, and falloff") {
  SimConfig cfg;
  auto w = straight_track_world();
  RobotState s;  // sensors sit 0.08 ahead, at lateral -0.03, 0, +0.03

  // sensor centered on the track reads full scale; the outer pair sits on
  // the ramp: 100*(hi - 0.03)/(2r) with hi = 0.035 + 0.006
  CHECK(sample_ir(s, w, cfg, 1) == doctest::Approx(100.0));
  double outer = 100.0 * (0.041 - 0.03) / 0.012;
  CHECK(sample_ir(s, w, cfg, 0) == doctest::Approx(outer).epsilon(1e-9));
  CHECK(sample_ir(s, w, cfg, 2) == doctest::Approx(outer).epsilon(1e-9));

  // middle sensor exactly on the band edge reads half scale
  s.y = w.track_width / 2;
  CHECK(sample_ir(s, w, cfg, 1) == doctest::Approx(50.0));

  // beyond edge + sensor radius reads zero
  s.y = w.track_width / 2 + cfg.ir_sensor_radius + 0.001;
  CHECK(sample_ir(s, w, cfg, 1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(sample_ir(s, w, cfg, 3), std::out_of_range);
}

TEST_CASE("ir noise is seeded per step") {
  SimConfig cfg;
  cfg.rng_seed = 42;
  auto w = straight_track_world();
  w.ir_noise = 5;
  RobotState s;
  s.y = w.track_width / 2;  // on the ramp so noise is visible both ways

  double first = sample_ir(s, w, cfg, 1);
  CHECK(sample_ir(s, w, cfg, 1) == first);  // same step, same value
  s.step_count = 1;
  double second = sample_ir(s, w, cfg, 1);
  CHECK(first != second);

  SimConfig other = cfg;
  other.rng_seed = 43;
  CHECK(sample_ir(s, w, other, 1) != second);
}

TEST_CASE("splitting sleeps does not change the trajectory") {
  SimConfig cfg;
  auto w = straight_track_world();
  w.ir_noise = 3;
  RobotState a;
  a.power_left = 120;
  a.power_right = 150;
  RobotState b = a;
  // 100 sleeps of 0.01 == one sleep of 1.0, step by step
  for (int i = 0; i < 100; ++i) {
    a = step_sim(a, w, cfg, cfg.dt);
  }
  b = run_steps(b, w, cfg, 100);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.theta == b.theta);
  CHECK(a.step_count == b.step_count);
  CHECK(sample_ir(a, w, cfg, 0) == sample_ir(b, w, cfg, 0));
}

TEST_CASE("world parsing") {
  auto w = parse_world(
      "# comment\n"
      "track 0.07 -0.2 0 10 0\n"
      "obstacle 0 0 1 0\n"
      "start 0 0.03 0\n"
      "noise 1\n");
  CHECK(w.track_width == 0.07);
  REQUIRE(w.track.size() == 2);
  CHECK(w.track[1][0] == 10.0);
  REQUIRE(w.obstacles.size() == 1);
  CHECK(w.start.y == 0.03);
  CHECK(w.ir_noise == 1.0);

  CHECK_THROWS_AS(parse_world("track 0.07 0 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_world("bogus 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_world("track 0 0 0 1 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_world("/nonexistent/world.txt"), std::invalid_argument);
}

TEST_CASE("bundled worlds parse and validate") {
  for (const char* name : {"box.txt", "straight.txt", "ucurve.txt", "oval.txt"}) {
    auto w = load_world(std::string(MIRTO_WORLDS_DIR) + "/" + name);
    w.validate();
  }
}

TEST_CASE("sim config validation") {
  SimConfig cfg;
  cfg.validate();
  cfg.dt = 0.05;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.dt = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SimConfig{};
  cfg.wheel_base = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
