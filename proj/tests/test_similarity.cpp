#include <doctest.h>

#include <cmath>

#include "feint/errors.hpp"
#include "feint/rng.hpp"
#include "feint/similarity.hpp"
#include "helpers.hpp"

using namespace feint;
using test::alert;

namespace {

int prefix_bits_oracle(std::uint32_t x, std::uint32_t y) {
  int n = 0;
  for (int bit = 31; bit >= 0; --bit) {
    if (((x >> bit) & 1u) != ((y >> bit) & 1u)) break;
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("stage lookup") {
  const auto map = StageMap::defaults();
  CHECK(stage_of("ICMP PING", map).stage == 1);
  CHECK(stage_of("ICMP PING", map).mapped);
  CHECK(stage_of("RSERVICES rsh root", map).stage == 6);
  CHECK(stage_of("RPC sadmind UDP NETMGT_PROC_SERVICE CLIENT_DOMAIN overflow attempt", map).stage == 4);
  CHECK(stage_of("DDOS mstream client to handler", map).stage == 7);
  const auto unknown = stage_of("SOMETHING NEW", map);
  CHECK(unknown.stage == 1);
  CHECK_FALSE(unknown.mapped);
}

TEST_CASE("longest pattern wins and exact beats prefix") {
  StageMap map({{"FOO*", 2}, {"FOO BAR*", 5}, {"FOO", 3}});
  CHECK(stage_of("FOO BAR BAZ", map).stage == 5);
  CHECK(stage_of("FOO X", map).stage == 2);
  CHECK(stage_of("FOO", map).stage == 3);
}

TEST_CASE("stage map validation") {
  CHECK_THROWS_AS(StageMap({{"X", 0}}), ArgumentError);
  CHECK_THROWS_AS(StageMap({{"X", 8}}), ArgumentError);
  CHECK_THROWS_AS(StageMap({{"X", 1}, {"X", 2}}), ArgumentError);
  CHECK_THROWS_AS(StageMap({{"", 1}}), ArgumentError);
}

TEST_CASE("event kernel") {
  CHECK(sim_event_delta(0) == 1.0);
  CHECK(sim_event_delta(1) == 1.0);
  CHECK(sim_event_delta(2) == doctest::Approx(std::exp(-0.5)));
  CHECK(sim_event_delta(3) == doctest::Approx(std::exp(-1.5)));
  CHECK(sim_event_delta(-1) == 0.0);
  CHECK(sim_event_delta(-6) == 0.0);
  for (int d = 2; d < 6; ++d) CHECK(sim_event_delta(d + 1) < sim_event_delta(d));
}

TEST_CASE("prefix bits") {
  CHECK(prefix_bits(Ipv4(172, 16, 112, 10), Ipv4(172, 16, 112, 50)) == 26);
  CHECK(prefix_bits(Ipv4(0, 0, 0, 0), Ipv4(128, 0, 0, 0)) == 0);
  CHECK(prefix_bits(Ipv4(1, 2, 3, 4), Ipv4(1, 2, 3, 4)) == 32);

  Rng rng = make_stream(42, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto x = static_cast<std::uint32_t>(rng());
    // mix in shared prefixes so every length is exercised
    const int keep = static_cast<int>(rng() % 33);
    const std::uint32_t mask = keep == 0 ? 0u : ~std::uint32_t{0} << (32 - keep);
    const auto y = (x & mask) | (static_cast<std::uint32_t>(rng()) & ~mask);
    CHECK(prefix_bits(Ipv4(x), Ipv4(y)) == prefix_bits_oracle(x, y));
  }
}

TEST_CASE("ip kernel takes the best of three address pairs") {
  const auto a = alert(0, "X", "10.0.0.1", "172.16.112.10");
  const auto b = alert(0, "X", "172.16.112.10", "10.9.9.9");
  // b's source is a's destination: a step further along the same path
  CHECK(sim_ip(b, a) == 1.0);
  // the reverse direction only sees 10.0.0.1 vs 10.9.9.9
  CHECK(sim_ip(a, b) == doctest::Approx(12.0 / 32.0));
  const auto c = alert(0, "X", "10.0.0.1", "172.16.112.10");
  CHECK(sim_ip(a, c) == 1.0);
}

TEST_CASE("port kernel") {
  auto a = alert(0, "X", "1.1.1.1", "2.2.2.2", 1, 6723);
  auto b = alert(0, "X", "1.1.1.1", "2.2.2.2", 1, 6723);
  CHECK(sim_port(a, b) == 1.0);
  a.d_port = 0;
  b.d_port = 65535;
  CHECK(sim_port(a, b) == 0.0);
  const auto icmp = alert(0, "ICMP PING", "1.1.1.1", "2.2.2.2", {}, {}, Protocol::kIcmp);
  CHECK(sim_port(icmp, b) == 1.0);
  CHECK(sim_port(icmp, b, 0.5) == 0.5);
}

TEST_CASE("time kernel") {
  const auto a = alert(0, "X", "1.1.1.1", "2.2.2.2");
  CHECK(sim_time(a, a, 60) == 1.0);
  CHECK(sim_time(a, alert(60, "X", "1.1.1.1", "2.2.2.2"), 60) == doctest::Approx(std::exp(-1.0)));
  CHECK(sim_time(a, alert(600, "X", "1.1.1.1", "2.2.2.2"), 60) == doctest::Approx(std::exp(-10.0)));
  CHECK(sim_time(alert(600, "X", "1.1.1.1", "2.2.2.2"), a, 60) == doctest::Approx(std::exp(-10.0)));
}

TEST_CASE("weighted total") {
  SimilarityConfig cfg;
  cfg.weights = {0.25, 0.25, 0.25, 0.25};
  // event 1, ip 24/32, port 1, time e^-1
  const auto a = alert(0, "ICMP PING", "10.0.0.1", "172.16.112.10", {}, {}, Protocol::kIcmp);
  const auto b = alert(60, "ICMP PING", "99.0.0.1", "172.16.112.200", {}, {}, Protocol::kIcmp);
  CHECK(sim_ip(a, b) == doctest::Approx(0.75));
  CHECK(sim_total(a, b, cfg) == doctest::Approx(0.77947).epsilon(1e-5));
  CHECK(sim_total(a, b, cfg) == doctest::Approx(0.25 * (1 + 0.75 + 1 + std::exp(-1.0))));
}

TEST_CASE("identical alerts score 1 under default weights") {
  const auto a = alert(0, "ICMP PING", "10.0.0.1", "172.16.112.10", {}, {}, Protocol::kIcmp);
  CHECK(sim_total(a, a, SimilarityConfig{}) == doctest::Approx(1.0));
}

TEST_CASE("total similarity stays in [0, 1] over random pairs") {
  Rng rng = make_stream(7, 1);
  const SimilarityConfig cfg;
  const char* types[] = {"ICMP PING", "RSERVICES rsh root", "DDOS mstream client to handler", "BACKDOOR x",
                         "UNKNOWN", "EXPLOIT y", "RPC sadmind UDP PING"};
  for (int i = 0; i < 10000; ++i) {
    RawAlert a, b;
    for (auto* x : {&a, &b}) {
      x->attack_type = types[rng() % 7];
      x->s_ip = Ipv4(static_cast<std::uint32_t>(rng()));
      x->d_ip = Ipv4(static_cast<std::uint32_t>(rng()));
      x->timestamp = Timestamp(static_cast<std::int64_t>(rng() % 100000000000ULL));
      if (rng() % 4) {
        x->protocol = Protocol::kTcp;
        x->s_port = static_cast<std::uint16_t>(rng());
        x->d_port = static_cast<std::uint16_t>(rng());
      } else {
        x->protocol = Protocol::kIcmp;
      }
    }
    const double s = sim_total(a, b, cfg);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("weights must be non-negative and sum to one") {
  SimilarityWeights w;
  CHECK_NOTHROW(w.validate());
  w.event = 0.5;
  CHECK_THROWS_AS(w.validate(), ArgumentError);
  w = {1.2, -0.2, 0, 0};
  CHECK_THROWS_AS(w.validate(), ArgumentError);
  SimilarityConfig cfg;
  cfg.time_scale = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("similarity config JSON round trip") {
  SimilarityConfig cfg;
  cfg.weights = {0.4, 0.3, 0.1, 0.2};
  cfg.time_scale = 30;
  cfg.stage_map = StageMap({{"A*", 2}, {"B", 7}});
  const auto back = similarity_config_from_json(to_json(cfg));
  CHECK(back.weights.event == 0.4);
  CHECK(back.time_scale == 30);
  CHECK(back.stage_map == cfg.stage_map);
  const auto partial = similarity_config_from_json(nlohmann::json{{"time_scale", 10}});
  CHECK(partial.weights.event == 0.35);
  CHECK(partial.stage_map == StageMap::defaults());
}
