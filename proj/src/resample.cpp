#include "feint/resample.hpp"

#include <algorithm>
#include <numeric>

#include "feint/errors.hpp"
#include "feint/rng.hpp"

namespace feint {

void ResamplePlan::validate() const {
  if (k < 1) throw ArgumentError("resample plan: k must be >= 1");
}

FlowDataset random_downsample(const FlowDataset& ds, const std::string& cls, std::size_t target,
                              std::uint64_t seed) {
  auto idx = ds.indices_of(cls);
  if (target > idx.size()) {
    throw ArgumentError("random_downsample: target " + std::to_string(target) + " exceeds " +
                        std::to_string(idx.size()) + " records of '" + cls + "'");
  }
  // partial Fisher-Yates: the first `target` slots become a uniform sample
  Rng rng = make_stream(seed, 0);
  for (std::size_t i = 0; i < target; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<char> keep(ds.size(), 1);
  for (std::size_t i = target; i < idx.size(); ++i) keep[idx[i]] = 0;

  std::vector<FlowRecord> out;
  out.reserve(ds.size() - (idx.size() - target));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (keep[i]) out.push_back(ds.records()[i]);
  }
  return FlowDataset::make(std::move(out));
}

namespace {

std::vector<std::size_t> knn_among(const Eigen::VectorXd& xn, const std::string& source_id, const FlowDataset& ds,
                                   const std::vector<std::size_t>& members, const std::vector<Eigen::VectorXd>& normed,
                                   std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (ds.records()[members[m]].source_id == source_id) continue;
    dist.emplace_back((normed[m] - xn).squaredNorm(), members[m]);
  }
  if (dist.size() < k) {
    throw ArgumentError("knn_same_class: class has " + std::to_string(dist.size()) + " other records, k = " +
                        std::to_string(k));
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

}  // namespace

std::vector<std::size_t> knn_same_class(const FlowRecord& x, const FlowDataset& ds, std::size_t k) {
  if (k < 1) throw ArgumentError("knn_same_class: k must be >= 1");
  const auto members = ds.indices_of(x.label);
  std::vector<Eigen::VectorXd> normed;
  normed.reserve(members.size());
  for (const auto i : members) normed.push_back(ds.normalized(i));
  return knn_among(ds.normalized(x), x.source_id, ds, members, normed, k);
}

FlowDataset smote(const FlowDataset& ds, const std::string& cls, std::size_t target, std::size_t k,
                  std::uint64_t seed) {
  if (k < 1) throw ArgumentError("smote: k must be >= 1");
  const auto members = ds.indices_of(cls);
  if (target < members.size()) {
    throw ArgumentError("smote: target " + std::to_string(target) + " is below the " +
                        std::to_string(members.size()) + " records of '" + cls + "'");
  }
  if (members.size() < k + 1) {
    throw ArgumentError("smote: class '" + cls + "' has " + std::to_string(members.size()) +
                        " records, needs at least k + 1 = " + std::to_string(k + 1));
  }
  std::vector<FlowRecord> out = ds.records();
  const std::size_t need = target - members.size();
  if (need == 0) return ds;

  std::vector<Eigen::VectorXd> normed;
  normed.reserve(members.size());
  for (const auto i : members) normed.push_back(ds.normalized(i));

  // neighbor lists are computed once per base sample
  std::vector<std::vector<std::size_t>> neighbors(members.size());
  const std::size_t bases_used = std::min(need, members.size());
  for (std::size_t b = 0; b < bases_used; ++b) {
    const auto& rec = ds.records()[members[b]];
    neighbors[b] = knn_among(normed[b], rec.source_id, ds, members, normed, k);
  }

  out.reserve(out.size() + need);
  for (std::size_t s = 0; s < need; ++s) {
    const std::size_t b = s % members.size();
    Rng rng = make_stream(seed, s);
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    const double gap = uniform01(rng);
    const auto& base = ds.records()[members[b]];
    const auto& nb = ds.records()[neighbors[b][pick]];
    FlowRecord syn;
    syn.features = smote_interpolate(base.features, nb.features, gap);
    syn.label = cls;
    syn.source_id = "smote:" + cls + ":" + std::to_string(s);
    out.push_back(std::move(syn));
  }
  return FlowDataset::make(std::move(out));
}

FlowDataset apply_plan(FlowDataset ds, const ResamplePlan& plan) {
  plan.validate();
  FlowDataset cur = std::move(ds);
  std::uint64_t stream = 0;
  for (const auto& [cls, target] : plan.targets) {
    const auto sub_seed = splitmix64(plan.seed ^ (0x9E3779B97F4A7C15ULL * ++stream));
    const std::size_t have = cur.count(cls);
    if (have == 0 && target > 0) throw ArgumentError("resample plan: class '" + cls + "' has no records");
    if (target < have) {
      cur = random_downsample(cur, cls, target, sub_seed);
    } else if (target > have) {
      cur = smote(cur, cls, target, plan.k, sub_seed);
    }
  }
  return cur;
}

ResamplePlan resample_plan_from_json(const nlohmann::json& j) {
  ResamplePlan p;
  if (j.contains("targets")) p.targets = j.at("targets").get<std::map<std::string, std::size_t>>();
  p.k = j.value("k", p.k);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

nlohmann::json to_json(const ResamplePlan& plan) {
  return {{"targets", plan.targets}, {"k", plan.k}, {"seed", plan.seed}};
}

}  // namespace feint
