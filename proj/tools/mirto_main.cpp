#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "mirto/behaviors.hpp"
#include "mirto/client.hpp"
#include "mirto/clock.hpp"
#include "mirto/contracts.hpp"
#include "mirto/emulator.hpp"
#include "mirto/protocol.hpp"
#include "mirto/sim.hpp"
#include "mirto/trace.hpp"
#include "mirto/transport.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitContract = 2;
constexpr int kExitUsage = 64;

struct RunSpec {
  std::string mode = "sim";
  std::string world_path;
  std::string behavior;
  std::uint64_t seed = 0;
  double duration_s = 0;
  std::string trace_path;
  std::string endpoint;
  std::vector<std::string> overrides;  // key=value
  bool symmetric = false;
};

int usage_error(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return kExitUsage;
}

struct Overrides {
  mirto::PidState pid;
  mirto::BangBangConfig bang;
};

Overrides apply_overrides(const RunSpec& spec) {
  Overrides out;
  if (spec.symmetric) {
    out.pid.setpoint = 2000;
    out.pid.integral_offset = 2000;
  }
  for (const auto& kv : spec.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
    }
    std::string key = kv.substr(0, eq);
    double value = std::stod(kv.substr(eq + 1));
    if (key == "kp") {
      out.pid.kp = value;
    } else if (key == "kd") {
      out.pid.kd = value;
    } else if (key == "ki") {
      out.pid.ki = value;
    } else if (key == "base-speed") {
      out.pid.base_speed = static_cast<int>(value);
    } else if (key == "setpoint") {
      out.pid.setpoint = value;
    } else if (key == "threshold") {
      out.pid.ir_threshold = static_cast<int>(value);
      out.bang.threshold = static_cast<int>(value);
    } else {
      throw CLI::ValidationError("unknown override key '" + key + "'");
    }
  }
  return out;
}

int cmd_run(const RunSpec& spec) {
  const Overrides config = apply_overrides(spec);

  mirto::Trace trace;
  auto run_behavior = [&](mirto::ClientSession& session, mirto::Clock& clock,
                          const mirto::PoseFn& pose) {
    if (spec.behavior == "explore") {
      mirto::ExploreConfig explore;
      explore.seed = spec.seed;
      trace = mirto::run_explore(session, clock, explore, spec.duration_s, pose)
                  .trace;
    } else if (spec.behavior == "monitor") {
      trace = mirto::run_monitor(session, clock, 3000, spec.duration_s, pose)
                  .trace;
    } else if (spec.behavior == "bangbang") {
      trace = mirto::run_line_follower(session, clock,
                                       mirto::FollowMode::bangbang,
                                       spec.duration_s, config.pid, config.bang,
                                       pose)
                  .trace;
    } else {
      trace = mirto::run_line_follower(session, clock, mirto::FollowMode::pid,
                                       spec.duration_s, config.pid, config.bang,
                                       pose)
                  .trace;
    }
  };

  if (spec.mode == "sim") {
    mirto::WorldModel world = mirto::load_world(spec.world_path);
    mirto::SimConfig sim_config;
    sim_config.rng_seed = spec.seed;

    auto [client_end, device_end] = mirto::make_loopback_pair();
    mirto::Emulator emulator(device_end, world, sim_config);
    mirto::VirtualTimeline timeline(
        static_cast<int>(std::llround(sim_config.dt * 1000)));
    std::thread device([&] { emulator.run_virtual(timeline); });

    {
      mirto::ClientSession session(client_end);
      mirto::VirtualClock clock(timeline,
                                [&](std::int64_t t) { session.wait_sync(t); });
      mirto::PoseFn pose = [&]() -> std::optional<mirto::Pose> {
        auto s = emulator.snapshot();
        return mirto::Pose{s.x, s.y, s.theta};
      };
      try {
        run_behavior(session, clock, pose);
      } catch (...) {
        timeline.stop();
        device.join();
        throw;
      }
      timeline.stop();
      device.join();
    }

    if (!spec.trace_path.empty()) {
      mirto::write_trace_csv(spec.trace_path, trace);
      std::cout << "wrote " << spec.trace_path << " (" << trace.size()
                << " rows)\n";
    }
    return kExitOk;
  }

  // serial (or tcp) hardware mode: wall clock, no pose ground truth
  std::string endpoint_spec = spec.endpoint;
  if (endpoint_spec.empty()) {
    if (const char* env = std::getenv("MIRTO_ENDPOINT")) {
      endpoint_spec = env;
    }
  }
  if (endpoint_spec.empty()) {
    throw CLI::ValidationError(
        "serial mode needs --endpoint or MIRTO_ENDPOINT");
  }
  mirto::ClientSession session(mirto::TransportEndpoint::parse(endpoint_spec));
  mirto::WallClock clock;
  run_behavior(session, clock, {});
  if (!spec.trace_path.empty()) {
    mirto::write_trace_csv(spec.trace_path, trace);
    std::cout << "wrote " << spec.trace_path << " (" << trace.size()
              << " rows)\n";
  }
  return kExitOk;
}

int cmd_conformance(const std::string& corpus_path) {
  std::ifstream in(corpus_path);
  if (!in) {
    std::cerr << "error: cannot open corpus '" << corpus_path << "'\n";
    return kExitRuntime;
  }
  std::string line;
  int lineno = 0;
  int checked = 0;
  int failures = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    ++checked;
    try {
      mirto::AsipMessage msg = mirto::decode(line);
      std::string round = mirto::encode(msg);
      if (round != line) {
        ++failures;
        std::cout << "line " << lineno << ": re-encode mismatch: '" << line
                  << "' -> '" << round << "'\n";
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "line " << lineno << ": " << e.what() << "\n";
    }
  }
  if (checked == 0) {
    std::cerr << "warning: corpus '" << corpus_path << "' has no messages\n";
    return kExitOk;
  }
  std::cout << checked << " messages, " << failures << " failures\n";
  return failures == 0 ? kExitOk : kExitRuntime;
}

int cmd_analyze(const std::string& trace_path, const std::string& op,
                double threshold, double track_width) {
  mirto::Trace trace = mirto::read_trace_csv(trace_path);
  if (op == "sum-ir") {
    auto column = mirto::ir1_column(trace);
    std::printf("%g\n", mirto::sum_ir_greater_than(threshold, column));
  } else if (op == "count-high") {
    std::printf("%d\n", mirto::count_high_corrections(trace, threshold));
  } else {
    auto lap = mirto::lap_time_s(trace, 2 * track_width, 4 * track_width);
    if (lap) {
      std::printf("%.2f\n", *lap);
    } else {
      std::printf("none\n");
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIRTO robot behaviors over the ASIP protocol"};
  app.require_subcommand(1);

  RunSpec spec;
  auto* run = app.add_subcommand("run", "run a behavior in sim or on hardware");
  run->add_option("--mode", spec.mode, "sim or serial")
      ->check(CLI::IsMember({"sim", "serial"}))
      ->capture_default_str();
  run->add_option("--world", spec.world_path, "world file (sim mode)");
  run->add_option("--behavior", spec.behavior, "behavior to run")
      ->required()
      ->check(CLI::IsMember({"explore", "monitor", "bangbang", "pid"}));
  run->add_option("--seed", spec.seed, "random seed")->capture_default_str();
  run->add_option("--duration", spec.duration_s, "run duration in seconds")
      ->required();
  run->add_option("--trace", spec.trace_path, "trace CSV output path");
  run->add_option("--endpoint", spec.endpoint,
                  "transport endpoint (serial mode); default MIRTO_ENDPOINT");
  run->add_option("--set", spec.overrides,
                  "controller override key=value (kp, kd, ki, base-speed, "
                  "threshold, setpoint)");
  run->add_flag("--symmetric", spec.symmetric,
                "use setpoint 2000 in both the proportional and integral terms");

  std::string corpus_path;
  auto* conformance =
      app.add_subcommand("conformance", "decode/re-encode a corpus of messages");
  conformance->add_option("corpus", corpus_path, "corpus file, one message per line")
      ->required();

  std::string trace_path;
  std::string analyze_op;
  double threshold = 45;
  double track_width = 0.07;
  auto* analyze = app.add_subcommand("analyze", "compute a statistic from a trace");
  analyze->add_option("trace", trace_path, "trace CSV")->required();
  analyze->add_option("--op", analyze_op, "sum-ir, count-high, or lap-time")
      ->required()
      ->check(CLI::IsMember({"sum-ir", "count-high", "lap-time"}));
  analyze->add_option("--threshold", threshold,
                      "threshold for sum-ir/count-high")
      ->capture_default_str();
  analyze->add_option("--track-width", track_width,
                      "track width for lap-time radii")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      if (spec.duration_s <= 0) {
        return usage_error("--duration must be positive");
      }
      if (spec.mode == "sim" && spec.world_path.empty()) {
        return usage_error("sim mode requires --world");
      }
      return cmd_run(spec);
    }
    if (conformance->parsed()) {
      return cmd_conformance(corpus_path);
    }
    return cmd_analyze(trace_path, analyze_op, threshold, track_width);
  } catch (const CLI::ValidationError& e) {
    return usage_error(e.what());
  } catch (const mirto::ContractViolation& e) {
    std::cerr << e.what() << "\n";
    return kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
