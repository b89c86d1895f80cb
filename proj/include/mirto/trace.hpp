#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mirto {

// One control tick. Pose columns are filled from simulator ground truth and
// stay empty against real hardware; error/correction are PID-only.
struct TraceRecord {
  std::int64_t t_ms{0};
  int power_left{0};
  int power_right{0};
  std::optional<double> x;
  std::optional<double> y;
  std::optional<double> theta;
  int ir0{0};
  int ir1{0};
  int ir2{0};
  bool bump_left{false};
  bool bump_right{false};
  std::optional<double> error;
  std::optional<int> correction;
};

using Trace = std::vector<TraceRecord>;

inline constexpr const char* kTraceHeader =
    "t_ms,pl,pr,x,y,theta,ir0,ir1,ir2,bl,br,err,corr";

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv(const std::string& path, const Trace& trace);
Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::string& path);

// Middle-sensor column as doubles (analytics input).
std::vector<double> ir1_column(const Trace& trace);

// Control ticks whose |correction| exceeds the threshold.
int count_high_corrections(const Trace& trace, double threshold);

// First time the pose returns within return_radius of the starting position
// after first leaving leave_radius. Requires pose columns.
std::optional<double> lap_time_s(const Trace& trace, double return_radius,
                                 double leave_radius);

}  // namespace mirto
