#include <doctest.h>

#include <sstream>

#include "feint/aggregation.hpp"
#include "feint/errors.hpp"
#include "feint/rng.hpp"
#include "feint/synth.hpp"
#include "helpers.hpp"

using namespace feint;
using test::alert;

TEST_CASE("match modes") {
  const auto base = alert(0, "SCAN nmap", "10.0.0.1", "172.16.112.10", 1024, 80);
  CHECK(match_mode(base, base) == AggregationMode::kA);
  CHECK(match_mode(base, alert(5, "SCAN nmap", "10.0.0.1", "172.16.112.10", 1024, 443)) == AggregationMode::kB);
  CHECK(match_mode(base, alert(5, "SCAN nmap", "10.0.0.1", "172.16.112.50", 1024, 80)) == AggregationMode::kC);
  CHECK(match_mode(base, alert(5, "SCAN nmap", "10.0.0.1", "172.16.113.50", 1024, 80)) == AggregationMode::kNone);
  CHECK(match_mode(base, alert(5, "SCAN nmap", "10.0.0.2", "172.16.112.10", 1024, 80)) == AggregationMode::kNone);

  const auto icmp = alert(0, "ICMP PING", "10.0.0.1", "172.16.112.10", {}, {}, Protocol::kIcmp);
  const auto sadmind = alert(3, "RPC sadmind UDP PING", "10.0.0.1", "172.16.112.10", 700, 32773, Protocol::kUdp);
  CHECK(match_mode(icmp, sadmind) == AggregationMode::kD);
}

TEST_CASE("alerts outside the window never match") {
  const auto a = alert(0, "SCAN nmap", "10.0.0.1", "172.16.112.10");
  const auto b = alert(61, "SCAN nmap", "10.0.0.1", "172.16.112.10");
  CHECK(match_mode(a, b) == AggregationMode::kNone);
  AggregationOptions wide;
  wide.window_seconds = 120;
  CHECK(match_mode(a, b, wide) == AggregationMode::kA);
}

TEST_CASE("five identical alerts collapse into one") {
  std::vector<RawAlert> xs;
  for (int i = 0; i < 5; ++i) xs.push_back(alert(i, "ICMP PING", "1.2.3.4", "5.6.7.8", {}, {}, Protocol::kIcmp));
  const auto r = aggregate(xs);
  REQUIRE(r.alerts.size() == 1);
  CHECK(r.alerts[0].count == 5);
  CHECK(r.alerts[0].mode == AggregationMode::kA);
  CHECK(r.report.rate == doctest::Approx(0.8));
  CHECK(r.alerts[0].first_seen == xs.front().timestamp);
  CHECK(r.alerts[0].last_seen == xs.back().timestamp);
}

TEST_CASE("two alerts outside the window stay separate") {
  std::vector<RawAlert> xs{alert(0, "X", "1.2.3.4", "5.6.7.8"), alert(100, "X", "1.2.3.4", "5.6.7.8")};
  const auto r = aggregate(xs);
  CHECK(r.alerts.size() == 2);
  CHECK(r.report.rate == 0.0);
}

TEST_CASE("the window is measured from the aggregate's first alert") {
  std::vector<RawAlert> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(alert(i * 30.0, "X", "1.2.3.4", "5.6.7.8"));
  const auto r = aggregate(xs);
  REQUIRE(r.alerts.size() == 2);
  CHECK(r.alerts[0].count == 3);  // 0, 30, 60
  CHECK(r.alerts[1].count == 1);  // 90
}

TEST_CASE("springboard alerts are linked, not merged") {
  std::vector<RawAlert> xs{alert(0, "ICMP PING", "1.2.3.4", "5.6.7.8", {}, {}, Protocol::kIcmp),
                           alert(2, "RPC sadmind UDP PING", "1.2.3.4", "5.6.7.8", 600, 32773, Protocol::kUdp)};
  const auto r = aggregate(xs);
  REQUIRE(r.alerts.size() == 2);
  REQUIRE(r.alerts[1].springboard_of.has_value());
  CHECK(*r.alerts[1].springboard_of == 0);
}

TEST_CASE("aggregation rate") {
  CHECK(aggregation_rate(10, 10) == 0.0);
  CHECK(aggregation_rate(10, 0) == 1.0);
  CHECK(aggregation_rate(0, 0) == 0.0);
  CHECK(aggregation_rate(17169, 3222) == doctest::Approx(0.8123362).epsilon(1e-7));
  CHECK_THROWS_AS(aggregation_rate(3, 4), ArgumentError);
}

TEST_CASE("counts are conserved and output never exceeds input") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng = make_stream(seed, 0);
    std::vector<RawAlert> xs;
    const char* types[] = {"A", "B", "C"};
    const char* hosts[] = {"10.0.0.1", "10.0.0.2", "10.0.1.3"};
    double t = 0;
    for (int i = 0; i < 200; ++i) {
      t += 20 * uniform01(rng);
      xs.push_back(alert(t, types[rng() % 3], hosts[rng() % 3], hosts[rng() % 3], 1000,
                         static_cast<std::uint16_t>(80 + rng() % 3)));
    }
    const auto r = aggregate(xs);
    std::size_t total = 0;
    for (const auto& a : r.alerts) {
      total += a.count;
      CHECK((a.count == 1) == (a.mode == AggregationMode::kNone));
    }
    CHECK(total == xs.size());
    CHECK(r.alerts.size() <= xs.size());
    for (std::size_t i = 1; i < r.alerts.size(); ++i) CHECK(r.alerts[i - 1].first_seen <= r.alerts[i].first_seen);
  }
}

TEST_CASE("input order does not matter beyond timestamps") {
  ScenarioSpec spec;
  spec.seed = 3;
  auto gen = generate_alert_log(spec);
  const auto forward = aggregate(gen.alerts);
  std::vector<RawAlert> shuffled = gen.alerts;
  std::reverse(shuffled.begin(), shuffled.end());
  std::stable_sort(shuffled.begin(), shuffled.end(),
                   [](const RawAlert& a, const RawAlert& b) { return a.timestamp < b.timestamp; });
  CHECK(aggregate(shuffled).alerts.size() == forward.alerts.size());
}

TEST_CASE("aggregates JSONL round trip") {
  ScenarioSpec spec;
  spec.seed = 9;
  const auto r = aggregate(generate_alert_log(spec).alerts);
  std::stringstream buf;
  write_aggregates_jsonl(buf, r.alerts);
  const auto back = read_aggregates_jsonl(buf);
  REQUIRE(back.size() == r.alerts.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].representative == r.alerts[i].representative);
    CHECK(back[i].count == r.alerts[i].count);
    CHECK(back[i].mode == r.alerts[i].mode);
    CHECK(back[i].springboard_of == r.alerts[i].springboard_of);
    CHECK(back[i].last_seen == r.alerts[i].last_seen);
  }
  std::istringstream bad("{\"count\": 1}\n");
  CHECK_THROWS_AS(read_aggregates_jsonl(bad), FormatError);
}
