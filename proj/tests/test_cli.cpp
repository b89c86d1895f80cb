#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mirto/trace.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(MIRTO_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  std::array<char, 256> buf;
  while (fgets(buf.data(), buf.size(), pipe)) {
    output += buf.data();
  }
  int status = pclose(pipe);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, output};
}

std::string worlds() { return MIRTO_WORLDS_DIR; }
std::string data_dir() { return MIRTO_TEST_DATA_DIR; }

std::string tmp_path(const std::string& name) {
  return "/tmp/mirto_cli_test_" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("usage errors exit 64") {
  CHECK(run_cli("run --behavior pid --duration 5").exit_code == 64);  // no world
  CHECK(run_cli("run --mode sim --world " + worlds() +
                "/straight.txt --behavior pid --duration 0")
            .exit_code == 64);
  CHECK(run_cli("run --mode sim --world x --behavior nope --duration 5")
            .exit_code == 64);
  CHECK(run_cli("bogus-subcommand").exit_code == 64);
  CHECK(run_cli("analyze /tmp/x.csv --op nonsense").exit_code == 64);
  CHECK(run_cli("").exit_code == 64);
}

TEST_CASE("runtime errors exit 1") {
  CHECK(run_cli("run --mode sim --world /nonexistent.txt --behavior pid "
                "--duration 1")
            .exit_code == 1);
}

TEST_CASE("conformance over the bundled corpus passes") {
  auto r = run_cli("conformance " + data_dir() + "/conformance_corpus.txt");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("0 failures") != std::string::npos);
}

TEST_CASE("conformance flags a corrupted corpus") {
  auto path = tmp_path("bad_corpus.txt");
  {
    std::ofstream out(path);
    out << "@I,a,3,{0:320,1:340,2:329}\n";
    out << "@I,a,2,{0:320}\n";  // count mismatch
  }
  auto r = run_cli("conformance " + path);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("conformance on an empty corpus warns and exits 0") {
  auto path = tmp_path("empty_corpus.txt");
  {
    std::ofstream out(path);
    out << "# nothing here\n";
  }
  auto r = run_cli("conformance " + path);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("no messages") != std::string::npos);
}

TEST_CASE("a short sim run writes a parseable trace") {
  auto path = tmp_path("run_pid.csv");
  auto r = run_cli("run --mode sim --world " + worlds() +
                   "/straight.txt --behavior pid --seed 3 --duration 2 "
                   "--trace " + path);
  REQUIRE(r.exit_code == 0);
  auto trace = mirto::read_trace_csv(path);
  CHECK(trace.size() == 100);  // 2 s at 20 ms ticks
  CHECK(trace.front().x.has_value());
  CHECK(trace.front().error.has_value());
}

TEST_CASE("identical sim runs produce byte-identical traces") {
  auto a = tmp_path("replay_a.csv");
  auto b = tmp_path("replay_b.csv");
  std::string args = "run --mode sim --world " + worlds() +
                     "/straight.txt --behavior pid --seed 9 --duration 3 "
                     "--trace ";
  REQUIRE(run_cli(args + a).exit_code == 0);
  REQUIRE(run_cli(args + b).exit_code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("analyze: sum-ir matches a hand fold") {
  auto path = tmp_path("analyze.csv");
  mirto::Trace trace;
  int irs[5] = {50, 40, 60, 45, 46};
  for (int i = 0; i < 5; ++i) {
    mirto::TraceRecord rec;
    rec.t_ms = 20 * (i + 1);
    rec.ir1 = irs[i];
    rec.correction = (i % 2 == 0) ? 80 : 10;
    trace.push_back(rec);
  }
  mirto::write_trace_csv(path, trace);

  auto sum = run_cli("analyze " + path + " --op sum-ir --threshold 45");
  CHECK(sum.exit_code == 0);
  CHECK(sum.output == "156\n");  // 50 + 60 + 46

  auto high = run_cli("analyze " + path + " --op count-high --threshold 45");
  CHECK(high.exit_code == 0);
  CHECK(high.output == "3\n");

  auto empty_path = tmp_path("analyze_empty.csv");
  mirto::write_trace_csv(empty_path, {});
  auto zero = run_cli("analyze " + empty_path + " --op sum-ir");
  CHECK(zero.exit_code == 0);
  CHECK(zero.output == "0\n");
}

TEST_CASE("analyze: lap-time on the oval bang-bang run") {
  auto path = tmp_path("lap.csv");
  auto r = run_cli("run --mode sim --world " + worlds() +
                   "/oval.txt --behavior bangbang --seed 7 --duration 60 "
                   "--trace " + path);
  REQUIRE(r.exit_code == 0);
  auto lap = run_cli("analyze " + path + " --op lap-time --track-width 0.07");
  CHECK(lap.exit_code == 0);
  CHECK(lap.output != "none\n");
  double lap_s = std::stod(lap.output);
  CHECK(lap_s > 5.0);
  CHECK(lap_s < 60.0);
}

TEST_CASE("overrides reach the controller") {
  auto path = tmp_path("override.csv");
  // a proportional-only controller (kd=ki=0) still runs
  auto r = run_cli("run --mode sim --world " + worlds() +
                   "/straight.txt --behavior pid --seed 3 --duration 2 "
                   "--set kd=0 --set ki=0 --trace " + path);
  REQUIRE(r.exit_code == 0);
  auto sym = run_cli("run --mode sim --world " + worlds() +
                     "/straight.txt --behavior pid --seed 3 --duration 2 "
                     "--symmetric --trace " + path);
  REQUIRE(sym.exit_code == 0);
  auto bad = run_cli("run --mode sim --world " + worlds() +
                     "/straight.txt --behavior pid --duration 2 --set zz=1");
  CHECK(bad.exit_code == 64);
}

TEST_CASE("serial mode without an endpoint is a usage error") {
  std::string cmd = std::string("env -u MIRTO_ENDPOINT ") + MIRTO_CLI_PATH +
                    " run --mode serial --behavior pid --duration 1 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 256> buf;
  while (fgets(buf.data(), buf.size(), pipe)) {
  }
  int status = pclose(pipe);
  CHECK(WEXITSTATUS(status) == 64);
}
