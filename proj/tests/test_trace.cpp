#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mirto/trace.hpp>

#include <sstream>

using namespace mirto;

namespace {

TraceRecord row(std::int64_t t) {
  TraceRecord r;
  r.t_ms = t;
  r.power_left = -115;
  r.power_right = 115;
  r.ir0 = 1;
  r.ir1 = 2;
  r.ir2 = 3;
  return r;
}

}  // namespace

TEST_CASE("csv round trip preserves every field") {
  Trace trace;
  auto a = row(0);
  a.x = 0.125;
  a.y = -0.5;
  a.theta = 3.141593;
  a.error = 2000.25;
  a.correction = -42;
  a.bump_left = true;
  trace.push_back(a);
  auto b = row(20);  // hardware-style row: no pose, no pid columns
  trace.push_back(b);

  std::ostringstream out;
  write_trace_csv(out, trace);
  std::istringstream in(out.str());
  Trace back = read_trace_csv(in);

  REQUIRE(back.size() == 2);
  CHECK(back[0].t_ms == 0);
  CHECK(*back[0].x == doctest::Approx(0.125));
  CHECK(*back[0].y == doctest::Approx(-0.5));
  CHECK(*back[0].error == doctest::Approx(2000.25));
  CHECK(*back[0].correction == -42);
  CHECK(back[0].bump_left);
  CHECK_FALSE(back[0].bump_right);
  CHECK_FALSE(back[1].x.has_value());
  CHECK_FALSE(back[1].error.has_value());
  CHECK_FALSE(back[1].correction.has_value());
  CHECK(back[1].power_left == -115);
}

TEST_CASE("empty trace writes just the header") {
  std::ostringstream out;
  write_trace_csv(out, {});
  CHECK(out.str() == std::string(kTraceHeader) + "\n");
  std::istringstream in(out.str());
  CHECK(read_trace_csv(in).empty());
}

TEST_CASE("reader rejects non-monotone timestamps and bad headers") {
  std::istringstream bad_header("nope\n");
  CHECK_THROWS_AS(read_trace_csv(bad_header), std::runtime_error);

  std::ostringstream out;
  Trace t{row(0), row(20)};
  write_trace_csv(out, t);
  std::string text = out.str();
  // duplicate the last row to break monotonicity
  auto second_row = text.rfind("20,");
  text += text.substr(second_row);
  std::istringstream in(text);
  CHECK_THROWS_AS(read_trace_csv(in), std::runtime_error);
}

TEST_CASE("count_high_corrections ignores rows without a correction") {
  Trace t;
  for (int i = 0; i < 6; ++i) {
    auto r = row(20 * (i + 1));
    if (i % 2 == 0) r.correction = i * 30;  // 0, 60, 120
    t.push_back(r);
  }
  CHECK(count_high_corrections(t, 45) == 2);
  CHECK(count_high_corrections(t, 1000) == 0);
}

TEST_CASE("lap_time_s needs a departure before a return") {
  Trace t;
  for (int i = 0; i < 100; ++i) {
    auto r = row(20 * (i + 1));
    // out along +x to 1.0 and back
    double x = i < 50 ? 0.02 * i : 0.02 * (99 - i);
    r.x = x;
    r.y = 0.0;
    t.push_back(r);
  }
  auto lap = lap_time_s(t, 0.1, 0.5);
  REQUIRE(lap.has_value());
  // returns within 0.1 of the start on the way back
  CHECK(*lap > 1.0);

  // never leaves the leave radius: no lap even though it sits at the start
  Trace stay;
  for (int i = 0; i < 10; ++i) {
    auto r = row(20 * (i + 1));
    r.x = 0.0;
    r.y = 0.0;
    stay.push_back(r);
  }
  CHECK_FALSE(lap_time_s(stay, 0.1, 0.5).has_value());

  // no pose columns: no lap
  Trace no_pose{row(20)};
  CHECK_FALSE(lap_time_s(no_pose, 0.1, 0.5).has_value());
}
