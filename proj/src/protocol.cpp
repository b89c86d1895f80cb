#include "mirto/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

namespace mirto {

namespace {

std::string with_offset(std::size_t offset, const std::string& reason) {
  return reason + " at offset " + std::to_string(offset);
}

struct FieldSpec {
  const char* name;
  std::int64_t min;
  std::int64_t max;
};

constexpr FieldSpec kPin{"pin", 0, 15};
constexpr FieldSpec kMode{"mode", 1, 3};
constexpr FieldSpec kLevel{"value", 0, 1};
constexpr FieldSpec kInterval{"interval-ms", 0, 65535};
constexpr FieldSpec kPower{"power", -255, 255};
constexpr FieldSpec kWheel{"wheel", 0, 1};

// Cursor over one line; all errors carry the byte offset of the field that
// failed to parse.
class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == s_.size(); }
  bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
  void skip(std::size_t n) { pos_ += n; }

  void expect(char c) {
    if (!peek(c)) {
      throw ParseError(pos_, with_offset(pos_, std::string("expected '") + c + "'"));
    }
    ++pos_;
  }

  std::int64_t read_int() {
    std::size_t start = pos_;
    std::int64_t value = 0;
    auto first = s_.data() + pos_;
    auto last = s_.data() + s_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr == first) {
      throw ParseError(start, with_offset(start, "expected integer"));
    }
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return value;
  }

  std::int64_t read_field(const FieldSpec& spec) {
    std::size_t start = pos_;
    std::int64_t v = read_int();
    if (v < spec.min || v > spec.max) {
      throw ParseError(start, with_offset(start, std::string(spec.name) +
                                                     " out of range"));
    }
    return v;
  }

  void expect_end() {
    if (!at_end()) {
      throw ParseError(pos_, with_offset(pos_, "trailing characters"));
    }
  }

 private:
  std::string_view s_;
  std::size_t pos_{0};
};

ReportMap read_report_map(Reader& r) {
  std::size_t count_pos = r.pos();
  std::int64_t declared = r.read_int();
  if (declared < 0) {
    throw ParseError(count_pos, with_offset(count_pos, "negative count"));
  }
  r.expect(',');
  r.expect('{');
  ReportMap map;
  while (!r.peek('}')) {
    if (!map.empty()) {
      r.expect(',');
    }
    std::size_t idx_pos = r.pos();
    std::int64_t idx = r.read_int();
    if (idx < 0 || idx > std::numeric_limits<std::int32_t>::max()) {
      throw ParseError(idx_pos, with_offset(idx_pos, "index out of range"));
    }
    r.expect(':');
    std::size_t val_pos = r.pos();
    std::int64_t val = r.read_int();
    if (val < std::numeric_limits<std::int32_t>::min() ||
        val > std::numeric_limits<std::int32_t>::max()) {
      throw ParseError(val_pos, with_offset(val_pos, "value out of range"));
    }
    map.push_back({static_cast<int>(idx), static_cast<std::int32_t>(val)});
  }
  r.expect('}');
  r.expect_end();
  std::stable_sort(map.begin(), map.end(),
                   [](const PinValue& a, const PinValue& b) {
                     return a.index < b.index;
                   });
  for (std::size_t i = 1; i < map.size(); ++i) {
    if (map[i].index == map[i - 1].index) {
      throw ParseError(count_pos,
                       with_offset(count_pos, "duplicate index in report map"));
    }
  }
  if (declared != static_cast<std::int64_t>(map.size())) {
    throw ParseError(count_pos,
                     with_offset(count_pos, "count does not match map size"));
  }
  return map;
}

void check_field(std::int64_t v, const FieldSpec& spec) {
  if (v < spec.min || v > spec.max) {
    throw EncodeError(spec.name, std::string(spec.name) + " out of range: " +
                                     std::to_string(v));
  }
}

ReportMap canonical_map(const ReportMap& map, const FieldSpec& index_spec,
                        const FieldSpec& value_spec) {
  ReportMap sorted = map;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PinValue& a, const PinValue& b) {
                     return a.index < b.index;
                   });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    check_field(sorted[i].index, index_spec);
    check_field(sorted[i].value, value_spec);
    if (i > 0 && sorted[i].index == sorted[i - 1].index) {
      throw EncodeError(index_spec.name, "duplicate index " +
                                             std::to_string(sorted[i].index));
    }
  }
  return sorted;
}

std::string format_report(char service, char tag, const ReportMap& map) {
  std::string out;
  out += '@';
  out += service;
  out += ',';
  out += tag;
  out += ',';
  out += std::to_string(map.size());
  out += ",{";
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(map[i].index);
    out += ':';
    out += std::to_string(map[i].value);
  }
  out += '}';
  return out;
}

constexpr FieldSpec kAnyIndex{"index", 0, std::numeric_limits<std::int32_t>::max()};
constexpr FieldSpec kAnalogValue{"value", 0, 1023};
constexpr FieldSpec kIrIndex{"index", 0, 2};
constexpr FieldSpec kIrValue{"value", 0, 100};
constexpr FieldSpec kPairIndex{"index", 0, 1};
constexpr FieldSpec kCount{"count", std::numeric_limits<std::int32_t>::min(),
                           std::numeric_limits<std::int32_t>::max()};

void reject_terminator(std::string_view text, const char* field) {
  if (text.find('\n') != std::string_view::npos ||
      text.find('\r') != std::string_view::npos) {
    throw EncodeError(field, "text contains a line terminator");
  }
}

struct Encoder {
  std::string operator()(const SetPinMode& m) const {
    check_field(m.pin, kPin);
    check_field(m.mode, kMode);
    return "I,p," + std::to_string(m.pin) + "," + std::to_string(m.mode);
  }
  std::string operator()(const DigitalWrite& m) const {
    check_field(m.pin, kPin);
    check_field(m.value, kLevel);
    return "I,d," + std::to_string(m.pin) + "," + std::to_string(m.value);
  }
  std::string operator()(const AnalogAutoreport& m) const {
    check_field(m.interval_ms, kInterval);
    return "I,A," + std::to_string(m.interval_ms);
  }
  std::string operator()(const IrAutoreport& m) const {
    check_field(m.interval_ms, kInterval);
    return "R,A," + std::to_string(m.interval_ms);
  }
  std::string operator()(const BumpAutoreport& m) const {
    check_field(m.interval_ms, kInterval);
    return "B,A," + std::to_string(m.interval_ms);
  }
  std::string operator()(const SetMotors& m) const {
    check_field(m.left, {"left", -255, 255});
    check_field(m.right, {"right", -255, 255});
    return "M,m," + std::to_string(m.left) + "," + std::to_string(m.right);
  }
  std::string operator()(const ResetEncoder& m) const {
    check_field(m.wheel, kWheel);
    return "E,r," + std::to_string(m.wheel);
  }
  std::string operator()(const AnalogReport& m) const {
    return format_report('I', 'a', canonical_map(m.pins, kPin, kAnalogValue));
  }
  std::string operator()(const DigitalReport& m) const {
    return format_report('I', 'd', canonical_map(m.pins, kPin, kLevel));
  }
  std::string operator()(const IrReport& m) const {
    return format_report('R', 'i', canonical_map(m.values, kIrIndex, kIrValue));
  }
  std::string operator()(const BumpReport& m) const {
    return format_report('B', 'b', canonical_map(m.values, kPairIndex, kLevel));
  }
  std::string operator()(const EncoderReport& m) const {
    return format_report('E', 'e', canonical_map(m.counts, kPairIndex, kCount));
  }
  std::string operator()(const DebugEvent& m) const {
    reject_terminator(m.text, "text");
    return "!" + m.text;
  }
  std::string operator()(const RawMessage& m) const {
    reject_terminator(m.line, "line");
    return m.line;
  }
};

}  // namespace

ParseError::ParseError(std::size_t offset, const std::string& reason)
    : std::runtime_error(reason), offset_(offset) {}

EncodeError::EncodeError(const std::string& field, const std::string& reason)
    : std::runtime_error(reason), field_(field) {}

std::string encode(const AsipMessage& msg) {
  return std::visit(Encoder{}, msg);
}

AsipMessage decode(std::string_view line) {
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);  // serial peers may terminate with CRLF
  }
  if (line.find('\n') != std::string_view::npos) {
    throw ParseError(line.find('\n'),
                     with_offset(line.find('\n'), "embedded terminator"));
  }
  if (!line.empty() && line[0] == '!') {
    return DebugEvent{std::string(line.substr(1))};
  }

  bool event = !line.empty() && line[0] == '@';
  std::size_t base = event ? 1 : 0;
  // known shapes start "X,y,"; anything else is a raw message
  if (line.size() < base + 3 || line[base + 1] != ',') {
    return RawMessage{std::string(line)};
  }
  char service = line[base];
  char tag = line[base + 2];

  auto known = [&](char s, char t) { return service == s && tag == t; };
  bool known_shape =
      event ? (known('I', 'a') || known('I', 'd') || known('R', 'i') ||
               known('B', 'b') || known('E', 'e'))
            : (known('I', 'p') || known('I', 'd') || known('I', 'A') ||
               known('R', 'A') || known('B', 'A') || known('M', 'm') ||
               known('E', 'r'));
  if (!known_shape) {
    return RawMessage{std::string(line)};
  }

  Reader r(line);
  r.skip(base + 3);  // prefix already validated
  r.expect(',');

  if (event) {
    ReportMap map = read_report_map(r);
    if (known('I', 'a')) return AnalogReport{std::move(map)};
    if (known('I', 'd')) return DigitalReport{std::move(map)};
    if (known('R', 'i')) return IrReport{std::move(map)};
    if (known('B', 'b')) return BumpReport{std::move(map)};
    return EncoderReport{std::move(map)};
  }

  if (known('I', 'p')) {
    int pin = static_cast<int>(r.read_field(kPin));
    r.expect(',');
    int mode = static_cast<int>(r.read_field(kMode));
    r.expect_end();
    return SetPinMode{pin, mode};
  }
  if (known('I', 'd')) {
    int pin = static_cast<int>(r.read_field(kPin));
    r.expect(',');
    int value = static_cast<int>(r.read_field(kLevel));
    r.expect_end();
    return DigitalWrite{pin, value};
  }
  if (known('I', 'A') || known('R', 'A') || known('B', 'A')) {
    int ms = static_cast<int>(r.read_field(kInterval));
    r.expect_end();
    if (service == 'I') return AnalogAutoreport{ms};
    if (service == 'R') return IrAutoreport{ms};
    return BumpAutoreport{ms};
  }
  if (known('M', 'm')) {
    int left = static_cast<int>(r.read_field(kPower));
    r.expect(',');
    int right = static_cast<int>(r.read_field(kPower));
    r.expect_end();
    return SetMotors{left, right};
  }
  int wheel = static_cast<int>(r.read_field(kWheel));
  r.expect_end();
  return ResetEncoder{wheel};
}

std::string substring_between_braces(std::string_view input) {
  auto open = index_of_first(input, "{");
  if (!open) {
    throw ParseError(input.size(), "missing '{'");
  }
  auto close = index_of_first(input, "}");
  if (!close) {
    throw ParseError(input.size(), "missing '}'");
  }
  if (*close < *open) {
    throw ParseError(*close, "'}' precedes '{'");
  }
  return std::string(input.substr(*open + 1, *close - *open - 1));
}

std::optional<std::size_t> index_of_first(std::string_view haystack,
                                          std::string_view needle) {
  if (needle.empty()) {
    throw std::invalid_argument("index_of_first: empty needle");
  }
  auto pos = haystack.find(needle.front());
  if (pos == std::string_view::npos) {
    return std::nullopt;
  }
  return pos;
}

}  // namespace mirto
