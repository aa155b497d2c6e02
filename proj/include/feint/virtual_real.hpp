#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "feint/flow.hpp"
#include "feint/nn/cnn.hpp"
#include "feint/svm.hpp"

namespace feint {

enum class AttackKind { kVirtual, kReal };

struct AtomicAttack {
  std::string record_id;  // FlowRecord::source_id
  std::string attack_type;
  double confidence = 0.0;  // mean probability of the normal class over the runs
  AttackKind kind = AttackKind::kVirtual;

  friend bool operator==(const AtomicAttack&, const AtomicAttack&) = default;
};

struct VirtualRealLib {
  std::string normal_class;
  std::vector<std::uint64_t> seeds;
  std::vector<AtomicAttack> real;   // ascending confidence
  std::vector<AtomicAttack> virt;   // descending confidence

  // Sort orders hold and no record is in both lists.
  bool invariants_hold() const;

  friend bool operator==(const VirtualRealLib&, const VirtualRealLib&) = default;
};

struct VrConfig {
  nn::CnnConfig cnn{10, 32, 64, 512, 5};  // classes is raised to the dataset's class count
  nn::TrainConfig train;
  double svm_c = svm::kDefaultCost;
  std::optional<double> svm_g;  // unset: 1 / feature length
  std::size_t runs = 10;
  std::string normal_class;  // empty: "Normal" or "Benign", whichever the data has
};

VrConfig vr_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VrConfig& cfg);

// CNN extractor with its softmax head plus a multiclass SVM on the extracted features,
// trained on the whole dataset.
struct VrClassifier {
  nn::CnnFeatureExtractor<double> cnn;
  svm::MulticlassModel<double> svm;
  std::vector<std::string> classes;  // head output order (dataset order)
  std::size_t normal_index = 0;

  std::string predict(const FlowDataset& ds, std::size_t i) const;
  double normal_probability(const FlowDataset& ds, std::size_t i) const;
};

std::string resolve_normal_class(const FlowDataset& ds, const std::string& requested);

VrClassifier train_vr_classifier(const FlowDataset& ds, const VrConfig& cfg, std::uint64_t seed);

// predictions[run][record], filled when the caller wants the per-run log.
struct VrRunLog {
  std::vector<std::vector<std::string>> predictions;
  std::vector<std::vector<double>> normal_probability;
};

// One training run per seed. An attack record predicted normal in every run is REAL,
// one predicted as its own class in every run is VIRTUAL, anything else is dropped.
VirtualRealLib build_virtual_real_lib(const FlowDataset& ds, const VrConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds, VrRunLog* log = nullptr);

// The labelling rule on its own, applied to per-run predictions over ds.
VirtualRealLib lib_from_runs(const FlowDataset& ds, const std::string& normal_class,
                             const std::vector<std::uint64_t>& seeds, const VrRunLog& log);
// Ten consecutive seeds starting at base.
std::vector<std::uint64_t> default_vr_seeds(std::uint64_t base, std::size_t runs = 10);

// Share of REAL entries the given classifier predicts as normal.
double verify_real_lib(const VirtualRealLib& lib, const VrClassifier& classifier, const FlowDataset& ds);

// Text file:
//   feint-vrlib 1
//   normal <class>
//   seeds <s1> ... <sn>
//   real <n>        then n lines "confidence<TAB>attack type<TAB>record id"
//   virtual <n>     same layout
void write_vr_lib(std::ostream& out, const VirtualRealLib& lib);
VirtualRealLib read_vr_lib(std::istream& in);
void save_vr_lib(const std::filesystem::path& path, const VirtualRealLib& lib);
VirtualRealLib load_vr_lib(const std::filesystem::path& path);

}  // namespace feint
