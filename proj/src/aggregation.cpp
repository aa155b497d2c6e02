#include "feint/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "feint/errors.hpp"
#include "feint/json_io.hpp"

namespace feint {

void to_json(nlohmann::json& j, const RawAlert& a) {
  j = nlohmann::json{{"timestamp_us", a.timestamp.micros()},
                     {"protocol", std::string(to_string(a.protocol))},
                     {"s_ip", a.s_ip.to_string()},
                     {"d_ip", a.d_ip.to_string()},
                     {"s_port", a.s_port ? nlohmann::json(*a.s_port) : nlohmann::json(nullptr)},
                     {"d_port", a.d_port ? nlohmann::json(*a.d_port) : nlohmann::json(nullptr)},
                     {"attack_type", a.attack_type},
                     {"classification", a.classification},
                     {"priority", a.priority},
                     {"signature", {a.signature.gid, a.signature.sid, a.signature.rev}}};
}

void from_json(const nlohmann::json& j, RawAlert& a) {
  a.timestamp = Timestamp(j.at("timestamp_us").get<std::int64_t>());
  const auto proto = j.at("protocol").get<std::string>();
  a.protocol = proto == "TCP" ? Protocol::kTcp : proto == "UDP" ? Protocol::kUdp : proto == "ICMP" ? Protocol::kIcmp
                                                                                                   : Protocol::kOther;
  a.s_ip = Ipv4::parse(j.at("s_ip").get<std::string>());
  a.d_ip = Ipv4::parse(j.at("d_ip").get<std::string>());
  a.s_port = j.at("s_port").is_null() ? std::nullopt : std::optional<std::uint16_t>(j.at("s_port").get<std::uint16_t>());
  a.d_port = j.at("d_port").is_null() ? std::nullopt : std::optional<std::uint16_t>(j.at("d_port").get<std::uint16_t>());
  a.attack_type = j.at("attack_type").get<std::string>();
  a.classification = j.at("classification").get<std::string>();
  a.priority = j.at("priority").get<int>();
  const auto& sig = j.at("signature");
  a.signature = {sig.at(0).get<std::uint32_t>(), sig.at(1).get<std::uint32_t>(), sig.at(2).get<std::uint32_t>()};
}

std::string_view to_string(AggregationMode m) {
  switch (m) {
    case AggregationMode::kA: return "A";
    case AggregationMode::kB: return "B";
    case AggregationMode::kC: return "C";
    case AggregationMode::kD: return "D";
    case AggregationMode::kNone: return "NONE";
  }
  return "NONE";
}

namespace {

AggregationMode mode_from(std::string_view s) {
  if (s == "A") return AggregationMode::kA;
  if (s == "B") return AggregationMode::kB;
  if (s == "C") return AggregationMode::kC;
  if (s == "D") return AggregationMode::kD;
  if (s == "NONE") return AggregationMode::kNone;
  throw FormatError("unknown aggregation mode: " + std::string(s));
}

bool same_segment(Ipv4 x, Ipv4 y, int prefix_bits) {
  if (prefix_bits <= 0) return true;
  if (prefix_bits >= 32) return x == y;
  const std::uint32_t mask = ~std::uint32_t{0} << (32 - prefix_bits);
  return (x.value() & mask) == (y.value() & mask);
}

bool merges(AggregationMode m) {
  return m == AggregationMode::kA || m == AggregationMode::kB || m == AggregationMode::kC;
}

}  // namespace

AggregationMode match_mode(const RawAlert& a, const RawAlert& b, const AggregationOptions& opts) {
  if (std::abs(seconds_between(a.timestamp, b.timestamp)) > opts.window_seconds) return AggregationMode::kNone;
  if (a.attack_type == b.attack_type) {
    if (a.s_ip != b.s_ip) return AggregationMode::kNone;
    if (a.d_ip == b.d_ip && a.s_port == b.s_port) {
      return a.d_port == b.d_port ? AggregationMode::kA : AggregationMode::kB;
    }
    return same_segment(a.d_ip, b.d_ip, opts.segment_prefix_bits) ? AggregationMode::kC : AggregationMode::kNone;
  }
  if (a.s_ip == b.s_ip && a.d_ip == b.d_ip) return AggregationMode::kD;
  return AggregationMode::kNone;
}

double aggregation_rate(std::size_t raw_count, std::size_t output_count) {
  if (output_count > raw_count) {
    throw ArgumentError("aggregation_rate: output count " + std::to_string(output_count) + " exceeds raw count " +
                        std::to_string(raw_count));
  }
  if (raw_count == 0) return 0.0;
  return static_cast<double>(raw_count - output_count) / static_cast<double>(raw_count);
}

AggregationResult aggregate(std::span<const RawAlert> alerts, const AggregationOptions& opts) {
  std::vector<std::size_t> order(alerts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return alerts[x].timestamp < alerts[y].timestamp; });

  AggregationResult result;
  auto& out = result.alerts;
  std::size_t first_open = 0;  // aggregates are created in time order, so the open ones form a suffix

  for (const auto idx : order) {
    const RawAlert& alert = alerts[idx];
    while (first_open < out.size() &&
           seconds_between(alert.timestamp, out[first_open].first_seen) > opts.window_seconds) {
      ++first_open;
    }
    std::optional<std::size_t> target;
    std::optional<std::size_t> springboard;
    AggregationMode target_mode = AggregationMode::kNone;
    for (std::size_t k = out.size(); k-- > first_open;) {
      const auto m = match_mode(out[k].representative, alert, opts);
      if (merges(m)) {
        target = k;
        target_mode = m;
        break;
      }
      if (m == AggregationMode::kD && !springboard) springboard = k;
    }
    if (target) {
      auto& agg = out[*target];
      ++agg.count;
      agg.last_seen = std::max(agg.last_seen, alert.timestamp);
      agg.mode = agg.mode == AggregationMode::kNone ? target_mode : std::max(agg.mode, target_mode);
      continue;
    }
    AggregatedAlert fresh;
    fresh.representative = alert;
    fresh.first_seen = fresh.last_seen = alert.timestamp;
    fresh.springboard_of = springboard;
    out.push_back(std::move(fresh));
  }

  result.report.raw_count = alerts.size();
  result.report.output_count = out.size();
  result.report.rate = aggregation_rate(alerts.size(), out.size());
  return result;
}

void write_aggregates_jsonl(std::ostream& out, const std::vector<AggregatedAlert>& alerts) {
  for (const auto& a : alerts) {
    nlohmann::json j;
    j["representative"] = a.representative;
    j["count"] = a.count;
    j["first_seen_us"] = a.first_seen.micros();
    j["last_seen_us"] = a.last_seen.micros();
    j["mode"] = std::string(to_string(a.mode));
    j["springboard_of"] = a.springboard_of ? nlohmann::json(*a.springboard_of) : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
}

std::vector<AggregatedAlert> read_aggregates_jsonl(std::istream& in) {
  std::vector<AggregatedAlert> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AggregatedAlert a;
      a.representative = j.at("representative").get<RawAlert>();
      a.count = j.at("count").get<std::size_t>();
      a.first_seen = Timestamp(j.at("first_seen_us").get<std::int64_t>());
      a.last_seen = Timestamp(j.at("last_seen_us").get<std::int64_t>());
      a.mode = mode_from(j.at("mode").get<std::string>());
      if (!j.at("springboard_of").is_null()) a.springboard_of = j.at("springboard_of").get<std::size_t>();
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("aggregates line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace feint
