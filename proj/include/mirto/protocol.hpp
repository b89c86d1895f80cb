#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// ASIP wire grammar, one message per line ('\n'-terminated on the wire):
//
//   commands (client -> device)          events (device -> client)
//   I,p,<pin>,<mode>    pin mode         @I,a,<n>,{i:v,...}   analog report
//   I,d,<pin>,<0|1>     digital write    @I,d,<n>,{i:v,...}   digital report
//   I,A,<ms>            analog report    @R,i,<n>,{i:v,...}   IR report
//   R,A,<ms>            IR autoreport    @B,b,<n>,{i:v,...}   bump report
//   B,A,<ms>            bump autoreport  @E,e,<n>,{i:v,...}   encoder report
//   M,m,<left>,<right>  motor powers     !<text>              debug/info
//   E,r,<wheel>         encoder reset
//
// Unknown but well-formed lines decode to RawMessage; malformed known
// messages raise ParseError with the byte offset of the offending field.

namespace mirto {

inline constexpr char kLineTerminator = '\n';

inline constexpr int kPinModeInput = 1;
inline constexpr int kPinModeInputPullup = 2;
inline constexpr int kPinModeOutput = 3;

// Registered service identifiers.
enum class Service : char {
  io = 'I',
  motor = 'M',
  encoder = 'E',
  ir_array = 'R',
  bump = 'B',
};

struct PinValue {
  int index{0};
  std::int32_t value{0};
  friend bool operator==(const PinValue&, const PinValue&) = default;
};
using ReportMap = std::vector<PinValue>;  // ascending unique indices

struct SetPinMode {
  int pin{0};
  int mode{kPinModeInput};
  friend bool operator==(const SetPinMode&, const SetPinMode&) = default;
};
struct DigitalWrite {
  int pin{0};
  int value{0};
  friend bool operator==(const DigitalWrite&, const DigitalWrite&) = default;
};
struct AnalogAutoreport {
  int interval_ms{0};
  friend bool operator==(const AnalogAutoreport&, const AnalogAutoreport&) = default;
};
struct IrAutoreport {
  int interval_ms{0};
  friend bool operator==(const IrAutoreport&, const IrAutoreport&) = default;
};
struct BumpAutoreport {
  int interval_ms{0};
  friend bool operator==(const BumpAutoreport&, const BumpAutoreport&) = default;
};
struct SetMotors {
  int left{0};
  int right{0};
  friend bool operator==(const SetMotors&, const SetMotors&) = default;
};
struct ResetEncoder {
  int wheel{0};
  friend bool operator==(const ResetEncoder&, const ResetEncoder&) = default;
};
struct AnalogReport {
  ReportMap pins;
  friend bool operator==(const AnalogReport&, const AnalogReport&) = default;
};
struct DigitalReport {
  ReportMap pins;
  friend bool operator==(const DigitalReport&, const DigitalReport&) = default;
};
struct IrReport {
  ReportMap values;
  friend bool operator==(const IrReport&, const IrReport&) = default;
};
struct BumpReport {
  ReportMap values;  // index 0=left, 1=right
  friend bool operator==(const BumpReport&, const BumpReport&) = default;
};
struct EncoderReport {
  ReportMap counts;
  friend bool operator==(const EncoderReport&, const EncoderReport&) = default;
};
struct DebugEvent {
  std::string text;
  friend bool operator==(const DebugEvent&, const DebugEvent&) = default;
};
// Escape hatch for lines that match no known shape; never holds a terminator.
struct RawMessage {
  std::string line;
  friend bool operator==(const RawMessage&, const RawMessage&) = default;
};

using AsipMessage =
    std::variant<SetPinMode, DigitalWrite, AnalogAutoreport, IrAutoreport,
                 BumpAutoreport, SetMotors, ResetEncoder, AnalogReport,
                 DigitalReport, IrReport, BumpReport, EncoderReport, DebugEvent,
                 RawMessage>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& reason);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EncodeError : public std::runtime_error {
 public:
  EncodeError(const std::string& field, const std::string& reason);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Renders one wire line (no terminator). Throws EncodeError when a field is
// outside its declared range; report maps are emitted in ascending index
// order and must not contain duplicate indices.
std::string encode(const AsipMessage& msg);

// Inverse of encode on all encodable messages. Command fields are
// range-checked; event report values are accepted as-is (range policy is the
// client's). Never throws anything but ParseError on arbitrary ASCII input.
AsipMessage decode(std::string_view line);

// Characters strictly between the first '{' and the first '}'.
std::string substring_between_braces(std::string_view input);

// Index of the first occurrence of needle's first character, or nullopt.
std::optional<std::size_t> index_of_first(std::string_view haystack,
                                          std::string_view needle);

}  // namespace mirto
