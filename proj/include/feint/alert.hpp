#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feint {

enum class Protocol { kTcp, kUdp, kIcmp, kOther };

std::string_view to_string(Protocol p);

// IPv4 address held as a host-order 32-bit integer (first octet in the high byte).
class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

  constexpr std::uint32_t value() const { return value_; }
  std::string to_string() const;

  // Throws ArgumentError for anything but a dotted quad.
  static Ipv4 parse(std::string_view text);

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

 private:
  std::uint32_t value_ = 0;
};

// Microseconds since the Unix epoch.
class Timestamp {
 public:
  constexpr Timestamp() = default;
  constexpr explicit Timestamp(std::int64_t micros) : micros_(micros) {}

  static Timestamp from_seconds(double s);

  constexpr std::int64_t micros() const { return micros_; }
  constexpr double seconds() const { return static_cast<double>(micros_) * 1e-6; }

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

 private:
  std::int64_t micros_ = 0;
};

// Signed difference a - b in seconds.
constexpr double seconds_between(Timestamp a, Timestamp b) {
  return static_cast<double>(a.micros() - b.micros()) * 1e-6;
}

struct SignatureId {
  std::uint32_t gid = 1;
  std::uint32_t sid = 0;
  std::uint32_t rev = 1;

  friend auto operator<=>(const SignatureId&, const SignatureId&) = default;
};

// One IDS alert: the nine-tuple plus the rule id carried by the fast-alert line.
// Ports are absent for ICMP; TCP and UDP always carry both ports.
struct RawAlert {
  Timestamp timestamp;
  Protocol protocol = Protocol::kOther;
  Ipv4 s_ip;
  Ipv4 d_ip;
  std::optional<std::uint16_t> s_port;
  std::optional<std::uint16_t> d_port;
  std::string attack_type;
  std::string classification;
  int priority = 1;
  SignatureId signature;

  friend bool operator==(const RawAlert&, const RawAlert&) = default;
};

inline constexpr int kDefaultBaseYear = 2000;

// Parses one line of the fast-alert grammar:
//   MM/DD[/YY]-HH:MM:SS.ffffff [**] [gid:sid:rev] msg [**] [Classification: text]
//   [Priority: n] {PROTO} ip[:port] -> ip[:port]
// Lines without a year are placed in base_year. IPv6 endpoints are rejected.
RawAlert parse_fast_alert(std::string_view line, int base_year = kDefaultBaseYear);

// Inverse of parse_fast_alert. The year is written only when it differs from base_year.
std::string format_fast_alert(const RawAlert& alert, int base_year = kDefaultBaseYear);

struct LineWarning {
  std::size_t line_number = 0;  // 1-based
  std::string message;
};

struct AlertLog {
  std::vector<RawAlert> alerts;
  std::vector<LineWarning> warnings;
};

// Reads a fast-alert log. Blank lines are ignored; malformed lines become warnings.
AlertLog load_alert_log(const std::filesystem::path& path, int base_year = kDefaultBaseYear);
AlertLog parse_alert_text(std::string_view text, int base_year = kDefaultBaseYear);

}  // namespace feint
