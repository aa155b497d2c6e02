#include <doctest.h>

#include "feint/errors.hpp"
#include "feint/metrics.hpp"
#include "feint/rng.hpp"

using namespace feint;

namespace {

ConfusionMatrix table3() {
  ConfusionMatrix::Counts m(5, 5);
  m << 60352, 123, 103, 9, 6,  //
      387, 3501, 260, 0, 18,   //
      5686, 82, 224081, 0, 4,  //
      73, 13, 17, 119, 6,      //
      7018, 4, 6, 1, 9160;
  return ConfusionMatrix({"Normal", "Probe", "DoS", "U2R", "R2L"}, m);
}

}  // namespace

TEST_CASE("completeness and accuracy rate") {
  CHECK(completeness({4, 4, 3}) == 0.75);
  CHECK(completeness({4, 4, 4}) == 1.0);
  CHECK(completeness({4, 4, 0}) == 0.0);
  CHECK(accuracy_rate({4, 2, 1}) == 0.5);
  CHECK(accuracy_rate({4, 2, 2}) == 1.0);
  CHECK(accuracy_rate({4, 2, 0}) == 0.0);
  CHECK_THROWS_AS(completeness({0, 2, 0}), ArgumentError);
  CHECK_THROWS_AS(accuracy_rate({2, 0, 0}), ArgumentError);
  CHECK_THROWS_AS(DetectionCounts({2, 5, 3}).validate(), ArgumentError);
  CHECK_THROWS_AS(DetectionCounts({5, 2, 3}).validate(), ArgumentError);
}

TEST_CASE("confusion matrix reference values") {
  const auto cm = table3();
  CHECK(cm.total() == 311029);
  CHECK(cm.accuracy().value == doctest::Approx(0.956).epsilon(0.0005 / 0.956));
  CHECK(cm.accuracy().value == doctest::Approx(0.9555797).epsilon(1e-6));
  const double recall[] = {0.996, 0.840, 0.975, 0.522, 0.566};
  const double precision[] = {0.821, 0.940, 0.998, 0.922, 0.996};
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(std::abs(cm.recall(k).value - recall[k]) < 0.0005);
    CHECK(std::abs(cm.precision(k).value - precision[k]) < 0.0005);
  }
}

TEST_CASE("matrix identities") {
  const auto cm = table3();
  std::int64_t trace = 0, rows = 0, cols = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    trace += cm.counts()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    rows += cm.actual(k);
    cols += cm.predicted(k);
  }
  CHECK(rows == cm.total());
  CHECK(cols == cm.total());
  CHECK(cm.accuracy().value == doctest::Approx(static_cast<double>(trace) / static_cast<double>(cm.total())));
  // micro-averaged recall is accuracy
  double micro = 0;
  for (std::size_t k = 0; k < 5; ++k) micro += cm.recall(k).value * static_cast<double>(cm.actual(k));
  CHECK(micro / static_cast<double>(cm.total()) == doctest::Approx(cm.accuracy().value));
}

TEST_CASE("from labels") {
  const std::vector<std::string> t{"a", "a", "b", "c", "c", "c"};
  const std::vector<std::string> p{"a", "b", "b", "c", "a", "c"};
  const auto cm = ConfusionMatrix::from_labels(t, p, {"a", "b", "c"});
  CHECK(cm.counts()(0, 0) == 1);
  CHECK(cm.counts()(0, 1) == 1);
  CHECK(cm.counts()(2, 0) == 1);
  CHECK(cm.accuracy().value == doctest::Approx(4.0 / 6.0));
  CHECK(cm.recall(2).value == doctest::Approx(2.0 / 3.0));
  CHECK(cm.precision(0).value == doctest::Approx(0.5));

  const auto perfect = ConfusionMatrix::from_labels(t, t, {"a", "b", "c"});
  CHECK(perfect.accuracy().value == 1.0);
  CHECK(perfect.counts().isDiagonal());

  CHECK_THROWS_AS(ConfusionMatrix::from_labels(t, {"a"}, {"a", "b", "c"}), ArgumentError);
  CHECK_THROWS_AS(ConfusionMatrix::from_labels({"z"}, {"a"}, {"a"}), ArgumentError);
}

TEST_CASE("zero denominators are flagged") {
  const auto cm = ConfusionMatrix::from_labels({"a", "a"}, {"a", "a"}, {"a", "b"});
  CHECK(cm.recall(1).undefined);
  CHECK(cm.recall(1).value == 0.0);
  CHECK(cm.precision(1).undefined);
  CHECK_FALSE(cm.recall(0).undefined);
  ConfusionMatrix::Counts zero = ConfusionMatrix::Counts::Zero(2, 2);
  CHECK(ConfusionMatrix({"a", "b"}, zero).accuracy().undefined);
}

TEST_CASE("ratios stay in [0, 1] for random labelings") {
  Rng rng = make_stream(1, 0);
  const std::vector<std::string> classes{"a", "b", "c", "d"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> t, p;
    for (int i = 0; i < 40; ++i) {
      t.push_back(classes[rng() % 4]);
      p.push_back(classes[rng() % 4]);
    }
    const auto cm = ConfusionMatrix::from_labels(t, p, classes);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(cm.recall(k).value >= 0.0);
      CHECK(cm.recall(k).value <= 1.0);
      CHECK(cm.precision(k).value >= 0.0);
      CHECK(cm.precision(k).value <= 1.0);
    }
  }
}

TEST_CASE("text output") {
  const auto cm = table3();
  const auto csv = cm.to_csv();
  CHECK(csv.find("60352") != std::string::npos);
  CHECK(csv.find("Normal") != std::string::npos);
  const auto table = cm.to_table();
  CHECK(table.find("0.996") != std::string::npos);
  CHECK(table.find("acc 0.9556") != std::string::npos);
}

TEST_CASE("constructor validation") {
  ConfusionMatrix::Counts neg(1, 1);
  neg << -1;
  CHECK_THROWS_AS(ConfusionMatrix({"a"}, neg), ArgumentError);
  CHECK_THROWS_AS(ConfusionMatrix({"a", "b"}, ConfusionMatrix::Counts::Zero(3, 3)), ArgumentError);
}
