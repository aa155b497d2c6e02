#include <doctest.h>

#include <set>

#include "feint/errors.hpp"
#include "feint/resample.hpp"
#include "feint/synth.hpp"
#include "helpers.hpp"

using namespace feint;
using test::flow;

namespace {

FlowDataset line_dataset() {
  return FlowDataset::make({flow({0.0}, "A", "a0"), flow({1.0}, "A", "a1"), flow({3.0}, "A", "a3"),
                            flow({10.0}, "B", "b0"), flow({11.0}, "B", "b1")});
}

// Smallest distance from p to any segment between two members of the class.
double segment_distance(const Eigen::VectorXd& p, const std::vector<Eigen::VectorXd>& members) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (i == j) continue;
      const Eigen::VectorXd d = members[j] - members[i];
      const double len2 = d.squaredNorm();
      double g = len2 > 0 ? (p - members[i]).dot(d) / len2 : 0.0;
      g = std::clamp(g, 0.0, 1.0);
      best = std::min(best, (members[i] + g * d - p).norm());
    }
  }
  return best;
}

}  // namespace

TEST_CASE("knn on a line") {
  const auto ds = line_dataset();
  const auto nn = knn_same_class(ds.records()[0], ds, 2);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0] == 1);
  CHECK(nn[1] == 2);
  // never crosses classes
  const auto nb = knn_same_class(ds.records()[3], ds, 1);
  CHECK(nb == std::vector<std::size_t>{4});
  CHECK_THROWS_AS(knn_same_class(ds.records()[0], ds, 3), ArgumentError);
  CHECK_THROWS_AS(knn_same_class(ds.records()[0], ds, 0), ArgumentError);
}

TEST_CASE("knn ties go to the lower index") {
  const auto ds = FlowDataset::make({flow({0.0}, "A", "q"), flow({-1.0}, "A", "l"), flow({1.0}, "A", "r")});
  CHECK(knn_same_class(ds.records()[0], ds, 1) == std::vector<std::size_t>{1});
}

TEST_CASE("interpolation endpoints") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 2, 3;
  b << 4, 6, 8;
  CHECK(smote_interpolate(a, b, 0.0) == a);
  CHECK(smote_interpolate(a, b, 1.0) == b);
  const Eigen::VectorXd mid = smote_interpolate(a, b, 0.5);
  CHECK(mid[0] == doctest::Approx(2.5));
  CHECK(mid[2] == doctest::Approx(5.5));
}

TEST_CASE("downsample keeps a subset of the class") {
  const auto ds = generate_flow_dataset(overlap_flow_spec(0.2));
  const auto same = random_downsample(ds, "Normal", ds.count("Normal"), 1);
  REQUIRE(same.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(same.records()[i].source_id == ds.records()[i].source_id);

  const auto gone = random_downsample(ds, "Normal", 0, 1);
  CHECK_FALSE(gone.has_class("Normal"));
  CHECK(gone.size() == ds.size() - ds.count("Normal"));

  const auto cut = random_downsample(ds, "Normal", 10, 3);
  CHECK(cut.count("Normal") == 10);
  CHECK(cut.count("DDoS") == ds.count("DDoS"));
  std::set<std::string> original;
  for (const auto& r : ds.records()) original.insert(r.source_id);
  std::set<std::string> kept;
  for (const auto& r : cut.records()) {
    CHECK(original.count(r.source_id) == 1);
    kept.insert(r.source_id);
  }
  CHECK(kept.size() == cut.size());
  CHECK(random_downsample(ds, "Normal", 10, 3).records()[0].source_id == cut.records()[0].source_id);
  CHECK_THROWS_AS(random_downsample(ds, "Normal", ds.count("Normal") + 1, 1), ArgumentError);
}

TEST_CASE("SMOTE reaches the target and stays on member segments") {
  const auto ds = generate_flow_dataset(overlap_flow_spec(0.1));  // Infiltration has 6 records
  const std::size_t have = ds.count("Infiltration");
  REQUIRE(have >= 6);
  const auto out = smote(ds, "Infiltration", 60, 5, 17);
  CHECK(out.count("Infiltration") == 60);
  CHECK(out.size() == ds.size() + 60 - have);

  std::vector<Eigen::VectorXd> members;
  for (const auto i : ds.indices_of("Infiltration")) members.push_back(ds.records()[i].features);
  for (const auto& r : out.records()) {
    if (r.source_id.rfind("smote:", 0) != 0) continue;
    CHECK(r.label == "Infiltration");
    CHECK(segment_distance(r.features, members) < 1e-9);
  }
  const auto again = smote(ds, "Infiltration", 60, 5, 17);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(again.records()[i].features == out.records()[i].features);
}

TEST_CASE("SMOTE preconditions") {
  const auto ds = line_dataset();
  CHECK_THROWS_AS(smote(ds, "A", 2, 1, 0), ArgumentError);   // below current count
  CHECK_THROWS_AS(smote(ds, "A", 10, 3, 0), ArgumentError);  // k + 1 > class size
  CHECK(smote(ds, "A", 3, 2, 0).size() == ds.size());
}

TEST_CASE("ten-fold oversampling of a small class") {
  FlowScenarioSpec spec;
  spec.classes = {{"Benign", 200, FlowGeometry::kNormal}, {"Infiltration", 28, FlowGeometry::kSeparable}};
  const auto ds = generate_flow_dataset(spec);
  ResamplePlan plan;
  plan.targets = {{"Infiltration", 280}, {"Benign", 100}};
  plan.seed = 4;
  const auto out = apply_plan(ds, plan);
  CHECK(out.count("Infiltration") == 280);
  CHECK(out.count("Benign") == 100);
}

TEST_CASE("plan leaves unlisted classes alone and validates") {
  const auto ds = generate_flow_dataset(overlap_flow_spec(0.2));
  ResamplePlan plan;
  plan.targets = {{"DDoS", 20}};
  const auto out = apply_plan(ds, plan);
  CHECK(out.count("DDoS") == 20);
  CHECK(out.count("Normal") == ds.count("Normal"));
  plan.targets = {{"Missing", 5}};
  CHECK_THROWS_AS(apply_plan(ds, plan), ArgumentError);
  plan.k = 0;
  CHECK_THROWS_AS(plan.validate(), ArgumentError);
}

TEST_CASE("plan JSON round trip") {
  ResamplePlan plan;
  plan.targets = {{"A", 3}, {"B", 9}};
  plan.k = 4;
  plan.seed = 77;
  const auto back = resample_plan_from_json(to_json(plan));
  CHECK(back.targets == plan.targets);
  CHECK(back.k == 4);
  CHECK(back.seed == 77);
}
