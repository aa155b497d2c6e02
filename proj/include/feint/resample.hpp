#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "feint/flow.hpp"

namespace feint {

inline constexpr std::size_t kDefaultSmoteK = 5;

struct ResamplePlan {
  std::map<std::string, std::size_t> targets;  // classes not listed keep their count
  std::size_t k = kDefaultSmoteK;
  std::uint64_t seed = 0;

  void validate() const;
};

// Keeps `target` records of cls chosen uniformly without replacement; record order
// is preserved and other classes are untouched.
FlowDataset random_downsample(const FlowDataset& ds, const std::string& cls, std::size_t target,
                              std::uint64_t seed);

// Indices (into ds.records()) of the k nearest records of x's class by Euclidean
// distance over normalized features. x itself is excluded by source_id; ties go to
// the lower index.
std::vector<std::size_t> knn_same_class(const FlowRecord& x, const FlowDataset& ds, std::size_t k);

// base + gap * (neighbor - base), elementwise with one gap.
template <typename Derived1, typename Derived2>
auto smote_interpolate(const Eigen::MatrixBase<Derived1>& base, const Eigen::MatrixBase<Derived2>& neighbor,
                       typename Derived1::Scalar gap) {
  return (base + gap * (neighbor - base)).eval();
}

// Appends target - count(cls) synthetic records of cls. Base samples are taken in
// record order round-robin; each synthetic record draws its neighbor and gap from its
// own stream of (seed, index).
FlowDataset smote(const FlowDataset& ds, const std::string& cls, std::size_t target, std::size_t k,
                  std::uint64_t seed);

// Downsamples or oversamples each planned class to its target. Takes the dataset by
// value so full-size inputs can be moved in.
FlowDataset apply_plan(FlowDataset ds, const ResamplePlan& plan);

ResamplePlan resample_plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResamplePlan& plan);

}  // namespace feint
