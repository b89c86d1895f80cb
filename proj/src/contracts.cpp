#include "mirto/contracts.hpp"

#include <cmath>
#include <limits>

namespace mirto {

namespace {
std::string render(const std::string& name, Blame blamed,
                   const std::string& value) {
  return "contract-violation " + name +
         " blame=" + (blamed == Blame::caller ? "caller" : "callee") +
         " value=" + value;
}

std::string render_number(double v) {
  if (std::isfinite(v) && v == std::trunc(v) &&
      std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}
}  // namespace

ContractViolation::ContractViolation(std::string guard_name, Blame blamed,
                                     std::string offending_value)
    : std::runtime_error(render(guard_name, blamed, offending_value)),
      guard_name_(std::move(guard_name)),
      blamed_(blamed),
      offending_value_(std::move(offending_value)) {}

bool check_speed(int current, double delta) {
  if (!std::isfinite(delta) || delta != std::trunc(delta)) {
    return false;  // only exact integers are accepted
  }
  if (std::abs(delta) > 1e9) {
    return false;
  }
  long long total = static_cast<long long>(current) +
                    static_cast<long long>(delta);
  return total >= -255 && total <= 255;
}

void SpeedAccumulator::add(double delta) {
  if (!check_speed(speed_, delta)) {
    throw ContractViolation("added_speed", Blame::caller, render_number(delta));
  }
  speed_ += static_cast<int>(delta);
}

}  // namespace mirto
