#include "feint/alert.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "feint/errors.hpp"

namespace feint {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kTcp: return "TCP";
    case Protocol::kUdp: return "UDP";
    case Protocol::kIcmp: return "ICMP";
    case Protocol::kOther: return "OTHER";
  }
  return "OTHER";
}

std::string Ipv4::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", (value_ >> 24) & 0xff, (value_ >> 16) & 0xff,
                (value_ >> 8) & 0xff, value_ & 0xff);
  return buf;
}

Ipv4 Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') throw ArgumentError("not an IPv4 address: " + std::string(text));
      ++p;
    }
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || next == p || next - p > 3 || part > 255) {
      throw ArgumentError("not an IPv4 address: " + std::string(text));
    }
    value = (value << 8) | part;
    p = next;
  }
  if (p != end) throw ArgumentError("not an IPv4 address: " + std::string(text));
  return Ipv4(value);
}

Timestamp Timestamp::from_seconds(double s) {
  return Timestamp(static_cast<std::int64_t>(std::llround(s * 1e6)));
}

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  std::string_view rest() const { return text_.substr(pos_); }

  void skip_spaces() {
    while (!done() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool consume(std::string_view literal) {
    if (rest().substr(0, literal.size()) != literal) return false;
    pos_ += literal.size();
    return true;
  }

  void expect(std::string_view literal, const char* what) {
    if (!consume(literal)) fail(std::string("expected ") + what);
  }

  // Exactly `width` digits when width > 0, otherwise one or more.
  std::uint64_t digits(const char* what, int width = 0) {
    const std::size_t start = pos_;
    std::uint64_t v = 0;
    while (!done() && text_[pos_] >= '0' && text_[pos_] <= '9' && (width == 0 || int(pos_ - start) < width)) {
      v = v * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
      ++pos_;
      if (v > 0xffffffffULL) fail(std::string(what) + " out of range");
    }
    if (pos_ == start || (width > 0 && int(pos_ - start) != width)) {
      pos_ = start;
      fail(std::string("expected ") + what);
    }
    return v;
  }

  // Reads up to (not including) the next occurrence of `stop`.
  std::string_view until(std::string_view stop, const char* what) {
    const auto at = text_.find(stop, pos_);
    if (at == std::string_view::npos) fail(std::string("unterminated ") + what);
    auto out = text_.substr(pos_, at - pos_);
    pos_ = at;
    return out;
  }

  std::string_view token() {
    const std::size_t start = pos_;
    while (!done() && text_[pos_] != ' ' && text_[pos_] != '\t') ++pos_;
    return text_.substr(start, pos_ - start);
  }

  [[noreturn]] void fail(std::string reason) const { throw ParseError(pos_, std::move(reason)); }
  [[noreturn]] void fail_at(std::size_t at, std::string reason) const { throw ParseError(at, std::move(reason)); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Timestamp parse_time(Cursor& c, int base_year) {
  using namespace std::chrono;
  const auto start = c.pos();
  const auto month = c.digits("month", 2);
  c.expect("/", "'/' after month");
  const auto day = c.digits("day", 2);
  int year_value = base_year;
  if (c.consume("/")) {
    const auto yy = static_cast<int>(c.digits("year", 2));
    year_value = yy < 70 ? 2000 + yy : 1900 + yy;
  }
  c.expect("-", "'-' between date and time");
  const auto hh = c.digits("hour", 2);
  c.expect(":", "':' after hour");
  const auto mm = c.digits("minute", 2);
  c.expect(":", "':' after minute");
  const auto ss = c.digits("second", 2);
  std::int64_t micros = 0;
  if (c.consume(".")) {
    const auto frac_start = c.pos();
    const auto frac = c.digits("fraction");
    const auto width = c.pos() - frac_start;
    if (width > 6) c.fail_at(frac_start, "fraction has more than 6 digits");
    micros = static_cast<std::int64_t>(frac);
    for (auto w = width; w < 6; ++w) micros *= 10;
  }
  const year_month_day ymd{year{year_value}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60 || year_value < 1970) c.fail_at(start, "invalid date/time");
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t secs = std::int64_t{days_since_epoch} * 86400 + std::int64_t(hh * 3600 + mm * 60 + ss);
  return Timestamp(secs * 1'000'000 + micros);
}

struct Endpoint {
  Ipv4 ip;
  std::optional<std::uint16_t> port;
};

Endpoint parse_endpoint(Cursor& c, const char* side) {
  const auto start = c.pos();
  const auto tok = c.token();
  if (tok.empty()) c.fail_at(start, std::string("missing ") + side + " address");
  const auto colons = std::count(tok.begin(), tok.end(), ':');
  if (colons > 1) c.fail_at(start, std::string(side) + " address is IPv6; only IPv4 is supported");
  Endpoint ep;
  std::string_view ip_text = tok;
  if (colons == 1) {
    const auto split = tok.find(':');
    ip_text = tok.substr(0, split);
    const auto port_text = tok.substr(split + 1);
    unsigned port = 0;
    auto [next, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || next != port_text.data() + port_text.size() || port > 65535) {
      c.fail_at(start + split + 1, std::string("invalid ") + side + " port");
    }
    ep.port = static_cast<std::uint16_t>(port);
  }
  try {
    ep.ip = Ipv4::parse(ip_text);
  } catch (const ArgumentError&) {
    c.fail_at(start, std::string("invalid ") + side + " IPv4 address");
  }
  return ep;
}

Protocol protocol_from(std::string_view name) {
  if (name == "TCP") return Protocol::kTcp;
  if (name == "UDP") return Protocol::kUdp;
  if (name == "ICMP") return Protocol::kIcmp;
  return Protocol::kOther;
}

}  // namespace

RawAlert parse_fast_alert(std::string_view line, int base_year) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  Cursor c(line);
  RawAlert a;
  a.timestamp = parse_time(c, base_year);

  c.skip_spaces();
  c.expect("[**]", "'[**]' opening the message");
  c.skip_spaces();
  c.expect("[", "'[gid:sid:rev]'");
  a.signature.gid = static_cast<std::uint32_t>(c.digits("gid"));
  c.expect(":", "':' after gid");
  a.signature.sid = static_cast<std::uint32_t>(c.digits("sid"));
  c.expect(":", "':' after sid");
  a.signature.rev = static_cast<std::uint32_t>(c.digits("rev"));
  c.expect("]", "']' closing the rule id");

  const auto msg_start = c.pos();
  a.attack_type = std::string(trim(c.until("[**]", "message")));
  if (a.attack_type.empty()) c.fail_at(msg_start, "empty message");
  c.expect("[**]", "'[**]' closing the message");
  c.skip_spaces();

  if (c.consume("[Classification:")) {
    a.classification = std::string(trim(c.until("]", "classification")));
    c.expect("]", "']'");
    c.skip_spaces();
  }
  if (!c.consume("[Priority:")) c.fail("missing [Priority: n] block (priority)");
  c.skip_spaces();
  a.priority = static_cast<int>(c.digits("priority value"));
  if (a.priority < 1) c.fail("priority must be >= 1");
  c.skip_spaces();
  c.expect("]", "']' closing priority");
  c.skip_spaces();

  c.expect("{", "'{PROTO}'");
  const auto proto_start = c.pos();
  const auto proto = c.until("}", "protocol");
  if (proto.empty()) c.fail_at(proto_start, "empty protocol");
  a.protocol = protocol_from(proto);
  c.expect("}", "'}'");
  c.skip_spaces();

  const auto src_start = c.pos();
  const auto src = parse_endpoint(c, "source");
  c.skip_spaces();
  c.expect("->", "'->'");
  c.skip_spaces();
  const auto dst = parse_endpoint(c, "destination");
  c.skip_spaces();
  if (!c.done()) c.fail("trailing characters after destination");

  a.s_ip = src.ip;
  a.d_ip = dst.ip;
  a.s_port = src.port;
  a.d_port = dst.port;
  const bool has_src = src.port.has_value();
  const bool has_dst = dst.port.has_value();
  switch (a.protocol) {
    case Protocol::kIcmp:
      if (has_src || has_dst) c.fail_at(src_start, "ICMP alert must not carry ports");
      break;
    case Protocol::kTcp:
    case Protocol::kUdp:
      if (!has_src || !has_dst) c.fail_at(src_start, "TCP/UDP alert requires both ports");
      break;
    case Protocol::kOther:
      if (has_src != has_dst) c.fail_at(src_start, "ports must be given on both endpoints or neither");
      break;
  }
  return a;
}

std::string format_fast_alert(const RawAlert& a, int base_year) {
  using namespace std::chrono;
  const auto micros = a.timestamp.micros();
  const auto secs = micros / 1'000'000;
  const auto frac = micros % 1'000'000;
  const sys_days day_point{days{secs / 86400}};
  const year_month_day ymd{day_point};
  const auto tod = secs % 86400;

  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02u/%02u", static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  out << buf;
  if (static_cast<int>(ymd.year()) != base_year) {
    std::snprintf(buf, sizeof buf, "/%02d", static_cast<int>(ymd.year()) % 100);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "-%02lld:%02lld:%02lld.%06lld", static_cast<long long>(tod / 3600),
                static_cast<long long>((tod / 60) % 60), static_cast<long long>(tod % 60),
                static_cast<long long>(frac));
  out << buf;
  out << " [**] [" << a.signature.gid << ':' << a.signature.sid << ':' << a.signature.rev << "] " << a.attack_type
      << " [**] ";
  if (!a.classification.empty()) out << "[Classification: " << a.classification << "] ";
  out << "[Priority: " << a.priority << "] {" << to_string(a.protocol) << "} " << a.s_ip.to_string();
  if (a.s_port) out << ':' << *a.s_port;
  out << " -> " << a.d_ip.to_string();
  if (a.d_port) out << ':' << *a.d_port;
  return out.str();
}

AlertLog parse_alert_text(std::string_view text, int base_year) {
  AlertLog log;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      log.alerts.push_back(parse_fast_alert(line, base_year));
    } catch (const ParseError& e) {
      log.warnings.push_back({line_no, e.what()});
    }
  }
  return log;
}

AlertLog load_alert_log(const std::filesystem::path& path, int base_year) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read alert log: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading alert log: " + path.string());
  return parse_alert_text(buf.str(), base_year);
}

}  // namespace feint
