#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace mirto {

enum class Blame { caller, callee };

// Recoverable runtime contract failure. what() renders the one-line
// diagnostic `contract-violation <name> blame=<party> value=<v>`.
class ContractViolation : public std::runtime_error {
 public:
  ContractViolation(std::string guard_name, Blame blamed,
                    std::string offending_value);
  const std::string& guard_name() const { return guard_name_; }
  Blame blamed() const { return blamed_; }
  const std::string& offending_value() const { return offending_value_; }

 private:
  std::string guard_name_;
  Blame blamed_;
  std::string offending_value_;
};

// True iff delta is an exact integer and current+delta stays inside the
// motor power range [-255, 255] (bounds inclusive).
bool check_speed(int current, double delta);

// Running speed total guarded by check_speed; rejected mutations leave the
// state untouched and blame the caller.
class SpeedAccumulator {
 public:
  void add(double delta);  // throws ContractViolation
  int current() const { return speed_; }

 private:
  int speed_{0};
};

namespace detail {
template <typename... Args>
std::string render_values(const Args&... args) {
  std::ostringstream os;
  bool first = true;
  ((os << (first ? "" : ",") << args, first = false), ...);
  return first ? std::string{"()"} : os.str();
}
}  // namespace detail

// Wraps an operation with pre/post predicates. A failing precondition blames
// the caller and the operation never runs; a failing postcondition blames
// the callee. Pre receives the call arguments; post receives the result (or
// nothing for void operations).
template <typename Pre, typename Post, typename Fn>
auto guard(std::string name, Pre pre, Post post, Fn fn) {
  return [name = std::move(name), pre = std::move(pre), post = std::move(post),
          fn = std::move(fn)](auto&&... args) {
    if (!pre(args...)) {
      throw ContractViolation(name, Blame::caller,
                              detail::render_values(args...));
    }
    using Result = std::invoke_result_t<Fn&, decltype(args)...>;
    if constexpr (std::is_void_v<Result>) {
      fn(std::forward<decltype(args)>(args)...);
      if (!post()) {
        throw ContractViolation(name, Blame::callee, "()");
      }
    } else {
      Result result = fn(std::forward<decltype(args)>(args)...);
      if (!post(result)) {
        throw ContractViolation(name, Blame::callee,
                                detail::render_values(result));
      }
      return result;
    }
  };
}

}  // namespace mirto
