#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "feint/errors.hpp"
#include "feint/feint_chain.hpp"
#include "helpers.hpp"

using namespace feint;
using test::alert;

namespace {

const char* kTypes[] = {"ICMP PING", "RPC sadmind UDP PING", "EXPLOIT a", "BACKDOOR b", "RSERVICES rsh root",
                        "DDOS mstream"};

AttackSequence base_of(std::size_t n, std::size_t id = 0) {
  AttackSequence s;
  s.id = id;
  for (std::size_t i = 0; i < n; ++i) {
    s.alerts.push_back(alert(static_cast<double>(i), kTypes[(i + id) % 6], "1.1.1.1", "2.2.2.2"));
    s.stages.push_back(stage_of(s.alerts.back().attack_type, StageMap::defaults()).stage);
    s.source_indices.push_back(i);
  }
  return s;
}

VirtualRealLib lib_of(std::size_t n_real, std::size_t n_virt = 20) {
  VirtualRealLib lib;
  lib.normal_class = "Normal";
  lib.seeds = {1};
  for (std::size_t i = 0; i < n_real; ++i) {
    lib.real.push_back({"r" + std::to_string(i), "Infiltration", 0.6 + 0.01 * static_cast<double>(i),
                        AttackKind::kReal});
  }
  for (std::size_t i = 0; i < n_virt; ++i) {
    lib.virt.push_back({"v" + std::to_string(i), "DDoS", 0.2 - 0.005 * static_cast<double>(i), AttackKind::kVirtual});
  }
  return lib;
}

AttackSequenceSet bases(std::size_t count) {
  AttackSequenceSet ass;
  for (std::size_t i = 0; i < count; ++i) ass.sequences.push_back(base_of(2 + i % 6, i));
  return ass;
}

std::size_t non_padding(const AttackChain& c) {
  std::size_t n = 0;
  for (const auto& e : c.events) n += !e.is_padding();
  return n;
}

}  // namespace

TEST_CASE("one real event into a five-event base") {
  const auto base = base_of(5);
  const auto c = build_feint_chain(base, lib_of(10), 1, 3);
  CHECK(c.events.size() == kChainLength);
  CHECK(non_padding(c) == 6);
  CHECK(c.label == ChainLabel::kFeint);
  REQUIRE(c.insertions.size() == 1);
  std::size_t real = 0;
  for (const auto& e : c.events) real += e.is_real;
  CHECK(real == 1);
  CHECK(c.events[c.insertions[0]].is_real);
}

TEST_CASE("insertions are increasing and base order is kept") {
  const auto lib = lib_of(10);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto base = base_of(4 + seed % 20, seed);
    const int n_real = 1 + static_cast<int>(seed % 8);
    const auto c = build_feint_chain(base, lib, n_real, seed);
    REQUIRE(c.insertions.size() == static_cast<std::size_t>(n_real));
    for (std::size_t i = 1; i < c.insertions.size(); ++i) CHECK(c.insertions[i - 1] < c.insertions[i]);
    CHECK(c.insertions.back() < non_padding(c));
    // the virtual events are exactly a prefix of the base, in order
    std::vector<std::string> virt;
    for (const auto& e : c.events) {
      if (!e.is_padding() && !e.is_real) virt.push_back(e.attack_type);
    }
    CHECK(virt.size() == std::min(base.size(), kChainLength - static_cast<std::size_t>(n_real)));
    for (std::size_t i = 0; i < virt.size(); ++i) CHECK(virt[i] == base.alerts[i].attack_type);
    // inserted entries are distinct lib records
    std::set<double> conf;
    for (const auto p : c.insertions) conf.insert(c.events[p].confidence);
    CHECK(conf.size() == c.insertions.size());
  }
}

TEST_CASE("feint chain preconditions") {
  const auto base = base_of(5);
  CHECK_THROWS_AS(build_feint_chain(base, lib_of(10), 0, 1), ArgumentError);
  CHECK_THROWS_AS(build_feint_chain(base, lib_of(10), 9, 1), ArgumentError);
  CHECK_THROWS_AS(build_feint_chain(base, lib_of(2), 3, 1), ArgumentError);
  CHECK_THROWS_AS(build_feint_chain(AttackSequence{}, lib_of(2), 1, 1), ArgumentError);
  CHECK_THROWS_AS(build_normal_chain(AttackSequence{}, lib_of(2), 1), ArgumentError);
}

TEST_CASE("normal chains: padding and truncation") {
  const auto lib = lib_of(5);
  const auto full = build_normal_chain(base_of(20), lib, 1);
  CHECK(non_padding(full) == 20);
  const auto short_chain = build_normal_chain(base_of(3), lib, 1);
  CHECK(short_chain.events.size() == 20);
  CHECK(non_padding(short_chain) == 3);
  for (std::size_t i = 3; i < 20; ++i) CHECK(short_chain.events[i].is_padding());
  const auto base = base_of(25);
  const auto cut = build_normal_chain(base, lib, 1);
  CHECK(cut.events.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(cut.events[i].attack_type == base.alerts[i].attack_type);
  CHECK(cut.label == ChainLabel::kNormal);
  CHECK(cut.insertions.empty());
  for (const auto& e : cut.events) CHECK_FALSE(e.is_real);
}

TEST_CASE("insertion histogram") {
  const auto h = default_insertion_histogram();
  std::size_t sum = 0;
  for (const auto& [n, c] : h) sum += c;
  CHECK(sum == 9364);
  CHECK(h.at(1) == 3371);
  CHECK(h.at(2) == 3248);
  CHECK(h.at(3) == 1811);
  CHECK(h.at(4) == 672);
  CHECK(h.at(5) == 200);
  CHECK(h.at(6) == 50);
  CHECK(h.at(7) == 11);
  CHECK(h.at(8) == 1);
  const auto s = scale_histogram(h, 0.1);
  CHECK(s.at(1) == 337);
  CHECK(s.at(3) == 181);
  CHECK(s.at(6) == 5);
  CHECK(s.at(7) == 1);
  CHECK(s.at(8) == 1);
  CHECK(scale_histogram({{2, 0}}, 0.5).at(2) == 0);
}

TEST_CASE("stratified split sizes") {
  std::vector<AttackChain> chains(11758);
  for (std::size_t i = 0; i < chains.size(); ++i) chains[i].label = i % 2 ? ChainLabel::kFeint : ChainLabel::kNormal;
  const auto [train, test] = stratified_split(chains, 0.8, 1);
  CHECK(train.size() + test.size() == 11758);
  // each label is rounded on its own, so the total may sit one unit per label off 0.8 n
  CHECK(std::abs(static_cast<long>(train.size()) - 9408) <= 2);
  CHECK(std::abs(static_cast<long>(test.size()) - 2350) <= 2);
  std::vector<int> seen(chains.size(), 0);
  for (auto i : train) ++seen[i];
  for (auto i : test) ++seen[i];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("feint lib: counts, label soundness, stratification, determinism") {
  const auto ass = bases(30);
  const auto lib = lib_of(40);
  const auto h = scale_histogram(default_insertion_histogram(), 0.05);
  const auto fl = build_feint_lib(ass, lib, h, 9);
  std::size_t feint = 0, total_h = 0;
  for (const auto& [n, c] : h) total_h += c;
  std::map<std::size_t, std::size_t> by_insertions;
  for (const auto& c : fl.chains) {
    CHECK(c.events.size() == kChainLength);
    const bool has_real = std::any_of(c.events.begin(), c.events.end(), [](const ChainEvent& e) { return e.is_real; });
    CHECK((c.label == ChainLabel::kFeint) == has_real);
    CHECK((c.label == ChainLabel::kFeint) == !c.insertions.empty());
    feint += c.label == ChainLabel::kFeint;
    if (c.label == ChainLabel::kFeint) ++by_insertions[c.insertions.size()];
  }
  CHECK(feint == total_h);
  CHECK(fl.chains.size() == 2 * total_h);
  for (const auto& [n, c] : h) CHECK(by_insertions[static_cast<std::size_t>(n)] == c);

  auto share = [&](const std::vector<std::size_t>& ids) {
    std::size_t f = 0;
    for (auto i : ids) f += fl.chains[i].label == ChainLabel::kFeint;
    return static_cast<double>(f) / static_cast<double>(ids.size());
  };
  CHECK(std::abs(share(fl.train) - share(fl.test)) <= 0.02);
  const double frac = static_cast<double>(fl.train.size()) / static_cast<double>(fl.chains.size());
  CHECK(frac == doctest::Approx(0.8).epsilon(0.01));

  const auto again = build_feint_lib(ass, lib, h, 9);
  CHECK(again.chains == fl.chains);
  CHECK(again.train == fl.train);

  CHECK_THROWS_AS(build_feint_lib(AttackSequenceSet{}, lib, h, 1), ArgumentError);
  CHECK_THROWS_AS(build_feint_lib(ass, lib_of(3), h, 1), ArgumentError);
}

TEST_CASE("feint lib CSV round trip") {
  const auto fl = build_feint_lib(bases(8), lib_of(10), {{1, 6}, {2, 4}}, 2);
  std::stringstream buf;
  write_feint_lib_csv(buf, fl);
  const auto back = read_feint_lib_csv(buf);
  CHECK(back.chains.size() == fl.chains.size());
  CHECK(back.train == fl.train);
  CHECK(back.test == fl.test);
  for (std::size_t i = 0; i < fl.chains.size(); ++i) {
    CHECK(back.chains[i].label == fl.chains[i].label);
    CHECK(back.chains[i].insertions == fl.chains[i].insertions);
    CHECK(back.chains[i].events == fl.chains[i].events);
  }
}

TEST_CASE("event embedding") {
  const EventEncoder enc({"A", "B"}, 4);
  CHECK(enc.embedding_size() == 6);
  const auto a = enc.embed(ChainEvent{"B", 7, 0.25, false});
  CHECK(a.size() == 6);
  CHECK(a[1] == 1.0);
  CHECK(a.head(4).sum() == 1.0);
  CHECK(a[4] == doctest::Approx(1.0));
  CHECK(a[5] == 0.25);
  CHECK(enc.embed(ChainEvent{"Z", 1, 0.0, false})[3] == 1.0);  // unknown bucket
  CHECK(enc.embed(ChainEvent{}).isZero());
  // provenance never leaks into the features
  CHECK(enc.embed(ChainEvent{"A", 2, 0.5, true}) == enc.embed(ChainEvent{"A", 2, 0.5, false}));
}

TEST_CASE("vote arithmetic") {
  const auto F = ChainLabel::kFeint, N = ChainLabel::kNormal;
  CHECK(weighted_vote({F, F, N}, {1, 1, 1}) == F);
  CHECK(weighted_vote({N, F, F}, {0.9, 0.1, 0.1}) == N);
  CHECK(weighted_vote({F}, {0.3}) == F);
  CHECK_THROWS_AS(weighted_vote({F, N}, {1, 1}), ArgumentError);
  CHECK_THROWS_AS(weighted_vote({F, N, N}, {1, 1}), ArgumentError);
}

TEST_CASE("detector: separable fixture, leakage guard, persistence") {
  // real events carry a high normal-probability, base events a low one
  const auto fl = build_feint_lib(bases(40), lib_of(30), {{1, 60}, {2, 60}, {3, 40}}, 5);
  DetectorConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 8;
  cfg.seed = 3;
  DetectorTrainLog log;
  const auto det = train_detector(fl, cfg, &log);
  CHECK(log.epoch_loss.size() == 8);
  CHECK(det.rnn().encoding_size() == 16);

  std::size_t ok = 0;
  for (const auto i : fl.test) {
    const auto d = det.detect(fl.chains[i]);
    ok += d.label == fl.chains[i].label;
    CHECK((d.label == ChainLabel::kFeint) == (d.decision > 0));
  }
  CHECK(static_cast<double>(ok) / static_cast<double>(fl.test.size()) >= 0.95);

  AttackChain blank;
  blank.events.resize(kChainLength);
  CHECK(det.detect(blank).label == ChainLabel::kNormal);
  AttackChain wrong;
  wrong.events.resize(5);
  CHECK_THROWS_AS(det.detect(wrong), ArgumentError);

  // is_real is provenance only: scrambling it changes nothing
  auto scrambled = fl;
  for (auto& c : scrambled.chains) {
    for (auto& e : c.events) e.is_real = !e.is_real && !e.is_padding();
  }
  const auto det2 = train_detector(scrambled, cfg);
  for (const auto i : fl.test) CHECK(det2.detect(fl.chains[i]).decision == det.detect(fl.chains[i]).decision);

  CHECK(ensemble_detect({&det}, fl.chains[fl.test[0]]) == det.detect(fl.chains[fl.test[0]]).label);
  CHECK_THROWS_AS(ensemble_detect({&det, &det2}, fl.chains[0]), ArgumentError);

  const auto dir = std::filesystem::temp_directory_path() / "feint_detector_test";
  std::filesystem::remove_all(dir);
  det.save(dir);
  const auto loaded = ChainDetector::load(dir);
  for (const auto i : fl.test) CHECK(loaded.detect(fl.chains[i]).decision == doctest::Approx(det.detect(fl.chains[i]).decision).epsilon(1e-12));
  std::filesystem::remove_all(dir);
}

TEST_CASE("detector needs both labels") {
  auto fl = build_feint_lib(bases(8), lib_of(10), {{1, 10}}, 2);
  std::vector<std::size_t> only_normal;
  for (auto i : fl.train) {
    if (fl.chains[i].label == ChainLabel::kNormal) only_normal.push_back(i);
  }
  fl.train = only_normal;
  CHECK_THROWS_AS(train_detector(fl, DetectorConfig{}), ArgumentError);
}

TEST_CASE("detector config JSON") {
  DetectorConfig c;
  c.hidden = 12;
  c.clip_norm = 0;
  c.seed = 5;
  const auto back = detector_config_from_json(to_json(c));
  CHECK(back.hidden == 12);
  CHECK(back.clip_norm == 0);
  CHECK(back.seed == 5);
}
