#include "mirto/trace.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mirto {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::optional<double> parse_opt_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.t_ms << ',' << r.power_left << ',' << r.power_right << ',';
    if (r.x) out << fmt6(*r.x);
    out << ',';
    if (r.y) out << fmt6(*r.y);
    out << ',';
    if (r.theta) out << fmt6(*r.theta);
    out << ',' << r.ir0 << ',' << r.ir1 << ',' << r.ir2 << ','
        << (r.bump_left ? 1 : 0) << ',' << (r.bump_right ? 1 : 0) << ',';
    if (r.error) out << fmt6(*r.error);
    out << ',';
    if (r.correction) out << *r.correction;
    out << '\n';
  }
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write trace file '" + path + "'");
  }
  write_trace_csv(out, trace);
}

Trace read_trace_csv(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line)) {
    return trace;  // empty file reads as an empty trace
  }
  if (line != kTraceHeader) {
    throw std::runtime_error("unexpected trace header: " + line);
  }
  std::int64_t prev_t = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 13) {
      throw std::runtime_error("trace row has " + std::to_string(f.size()) +
                               " fields");
    }
    TraceRecord r;
    r.t_ms = std::stoll(f[0]);
    r.power_left = std::stoi(f[1]);
    r.power_right = std::stoi(f[2]);
    r.x = parse_opt_double(f[3]);
    r.y = parse_opt_double(f[4]);
    r.theta = parse_opt_double(f[5]);
    r.ir0 = std::stoi(f[6]);
    r.ir1 = std::stoi(f[7]);
    r.ir2 = std::stoi(f[8]);
    r.bump_left = f[9] == "1";
    r.bump_right = f[10] == "1";
    r.error = parse_opt_double(f[11]);
    if (!f[12].empty()) r.correction = std::stoi(f[12]);
    if (r.t_ms <= prev_t) {
      throw std::runtime_error("trace timestamps must be strictly increasing");
    }
    prev_t = r.t_ms;
    trace.push_back(r);
  }
  return trace;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open trace file '" + path + "'");
  }
  return read_trace_csv(in);
}

std::vector<double> ir1_column(const Trace& trace) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& r : trace) {
    out.push_back(r.ir1);
  }
  return out;
}

int count_high_corrections(const Trace& trace, double threshold) {
  int n = 0;
  for (const auto& r : trace) {
    if (r.correction && std::abs(*r.correction) > threshold) ++n;
  }
  return n;
}

std::optional<double> lap_time_s(const Trace& trace, double return_radius,
                                 double leave_radius) {
  if (trace.empty() || !trace.front().x || !trace.front().y) {
    return std::nullopt;
  }
  double sx = *trace.front().x;
  double sy = *trace.front().y;
  bool left = false;
  for (const auto& r : trace) {
    if (!r.x || !r.y) continue;
    double d = std::hypot(*r.x - sx, *r.y - sy);
    if (!left) {
      if (d > leave_radius) left = true;
      continue;
    }
    if (d <= return_radius) {
      return static_cast<double>(r.t_ms - trace.front().t_ms) / 1000.0;
    }
  }
  return std::nullopt;
}

}  // namespace mirto
