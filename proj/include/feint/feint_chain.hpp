#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "feint/clustering.hpp"
#include "feint/nn/birnn.hpp"
#include "feint/similarity.hpp"
#include "feint/svm.hpp"
#include "feint/virtual_real.hpp"

namespace feint {

inline constexpr std::size_t kChainLength = 20;
inline constexpr std::size_t kTypeVocabSize = 32;
inline constexpr int kMaxInsertions = 8;

enum class ChainLabel { kNormal = 0, kFeint = 1 };

struct ChainEvent {
  std::string attack_type;  // empty for padding
  int stage = 0;            // 0 for padding
  double confidence = 0.0;
  bool is_real = false;     // provenance only, never embedded

  bool is_padding() const { return attack_type.empty(); }
  friend bool operator==(const ChainEvent&, const ChainEvent&) = default;
};

struct AttackChain {
  std::vector<ChainEvent> events;       // exactly L entries, padding last
  ChainLabel label = ChainLabel::kNormal;
  std::vector<std::size_t> insertions;  // positions of real events, increasing
  std::size_t base_id = 0;              // id of the attack sequence it was built on

  friend bool operator==(const AttackChain&, const AttackChain&) = default;
};

struct ChainOptions {
  std::size_t length = kChainLength;
  StageMap stage_map = StageMap::defaults();
};

// Base virtual events carry confidences drawn from the virtual lib (0 if it is empty),
// so NORMAL and FEINT chains share the same base distribution.
AttackChain build_normal_chain(const AttackSequence& base, const VirtualRealLib& lib, std::uint64_t seed,
                               const ChainOptions& opts = {});

// The base is cut to L - n_real events, then n_real distinct REAL entries (biased toward
// low confidence) are placed at distinct random positions; base order is kept.
AttackChain build_feint_chain(const AttackSequence& base, const VirtualRealLib& lib, int n_real, std::uint64_t seed,
                              const ChainOptions& opts = {});

// Insertion count -> number of FEINT chains.
using InsertionHistogram = std::map<int, std::size_t>;

InsertionHistogram default_insertion_histogram();
// floor(count * scale), at least 1 for nonzero buckets.
InsertionHistogram scale_histogram(const InsertionHistogram& h, double scale);

struct FeintLib {
  std::vector<AttackChain> chains;
  std::vector<std::size_t> train;  // indices into chains
  std::vector<std::size_t> test;
  InsertionHistogram histogram;
};

// FEINT chains per histogram plus as many NORMAL chains, bases cycled over the
// sequences, then a stratified 8:2 split.
FeintLib build_feint_lib(const AttackSequenceSet& sequences, const VirtualRealLib& lib,
                         const InsertionHistogram& histogram, std::uint64_t seed, const ChainOptions& opts = {});

// Per-label 80% train, rounded to nearest.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<AttackChain>& chains,
                                                                               double train_fraction,
                                                                               std::uint64_t seed);

// One-hot type block (last bucket catches unknown or overflow types), stage / 7, confidence.
class EventEncoder {
 public:
  EventEncoder() = default;
  EventEncoder(std::vector<std::string> types, std::size_t vocab_size = kTypeVocabSize);

  // Sorted distinct types of the lib's chains.
  static EventEncoder fit(const std::vector<AttackChain>& chains, std::size_t vocab_size = kTypeVocabSize);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t embedding_size() const { return vocab_size_ + 2; }
  const std::vector<std::string>& types() const { return types_; }

  Eigen::VectorXd embed(const ChainEvent& e) const;
  std::vector<Eigen::VectorXd> embed(const AttackChain& c) const;

 private:
  std::vector<std::string> types_;
  std::size_t vocab_size_ = kTypeVocabSize;
};

struct DetectorConfig {
  nn::Index hidden = nn::kDefaultHidden;
  double svm_c = svm::kDefaultCost;
  double svm_g = svm::kDefaultGamma;
  int epochs = 15;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  double holdout_fraction = 0.1;
  std::size_t vocab_size = kTypeVocabSize;
  double clip_norm = 1.0;  // cap on the batch gradient norm, 0 disables
  std::uint64_t seed = 0;
};

DetectorConfig detector_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DetectorConfig& c);

struct Detection {
  ChainLabel label = ChainLabel::kNormal;
  double decision = 0.0;  // > 0 leans FEINT
};

// Bi-RNN encoder trained through a logistic output, then frozen; an RBF SVM classifies
// the 2H encodings.
class ChainDetector {
 public:
  ChainDetector() = default;
  ChainDetector(EventEncoder enc, nn::BiRnnEncoder<double> rnn, Eigen::VectorXd head_w, double head_b,
                svm::BinaryModel<double> svm, std::size_t length, double validation_accuracy);

  Eigen::VectorXd encode(const AttackChain& chain) const;
  Detection detect(const AttackChain& chain) const;

  // Output of the logistic head used while training the encoder.
  double head_probability(const AttackChain& chain) const;

  const EventEncoder& encoder() const { return enc_; }
  const nn::BiRnnEncoder<double>& rnn() const { return rnn_; }
  const svm::BinaryModel<double>& svm() const { return svm_; }
  std::size_t length() const { return length_; }
  double validation_accuracy() const { return validation_accuracy_; }

  // detector.bin (encoder and head), detector.svm, detector.json in dir.
  void save(const std::filesystem::path& dir) const;
  static ChainDetector load(const std::filesystem::path& dir);

 private:
  EventEncoder enc_;
  nn::BiRnnEncoder<double> rnn_;
  Eigen::VectorXd head_w_;
  double head_b_ = 0.0;
  svm::BinaryModel<double> svm_;
  std::size_t length_ = kChainLength;
  double validation_accuracy_ = 0.0;
};

struct DetectorTrainLog {
  std::vector<double> epoch_loss;
};

// Trains on lib.train; a stratified holdout of it gives the validation accuracy.
ChainDetector train_detector(const FeintLib& lib, const DetectorConfig& cfg, DetectorTrainLog* log = nullptr);

// Weighted vote over an odd number of detectors; empty weights mean each detector's
// validation accuracy.
ChainLabel ensemble_detect(const std::vector<const ChainDetector*>& detectors, const AttackChain& chain,
                           std::vector<double> weights = {});

// Vote arithmetic on its own: FEINT wins when its weight exceeds NORMAL's.
ChainLabel weighted_vote(const std::vector<ChainLabel>& votes, const std::vector<double>& weights);

// CSV with one row per event: chain,label,split,position,attack_type,stage,confidence,is_real,base_id
void write_feint_lib_csv(std::ostream& out, const FeintLib& lib);
FeintLib read_feint_lib_csv(std::istream& in);

}  // namespace feint
