#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "feint/alert.hpp"

namespace feint {

// Kill-chain stages: 1 reconnaissance, 2 weaponization, 3 delivery, 4 exploitation,
// 5 installation, 6 command and control, 7 actions on objectives.
inline constexpr int kStageCount = 7;

struct StagePattern {
  std::string pattern;  // a trailing '*' makes it a prefix pattern
  int stage = 1;
  friend bool operator==(const StagePattern&, const StagePattern&) = default;
};

class StageMap {
 public:
  StageMap() = default;
  explicit StageMap(std::vector<StagePattern> entries);

  // Signature-name defaults for the LLDoS and CICIDS families used by the tools.
  static StageMap defaults();

  const std::vector<StagePattern>& entries() const { return entries_; }

  friend bool operator==(const StageMap&, const StageMap&) = default;

 private:
  std::vector<StagePattern> entries_;
};

struct StageLookup {
  int stage = 1;
  bool mapped = false;
};

// Longest matching pattern wins; an exact pattern beats a prefix of equal length.
// Unmapped types fall back to stage 1 with mapped = false.
StageLookup stage_of(std::string_view attack_type, const StageMap& map);

struct SimilarityWeights {
  double event = 0.35;
  double ip = 0.30;
  double port = 0.10;
  double time = 0.25;

  // Throws ArgumentError unless all weights are >= 0 and sum to 1 within 1e-9.
  void validate() const;
};

struct SimilarityConfig {
  SimilarityWeights weights;
  StageMap stage_map = StageMap::defaults();
  double time_scale = 60.0;              // tau, seconds per unit of delta t
  double absent_port_similarity = 1.0;  // used when either alert has no port

  void validate() const;
};

// Attack-event kernel on the stage difference delta = stage(a) - stage(b).
double sim_event_delta(int delta);
double sim_event(const RawAlert& a, const RawAlert& b, const StageMap& map);

// Number of equal leading bits of two addresses (0..32).
int prefix_bits(Ipv4 x, Ipv4 y);

// max{H(a.s, b.d), H(a.s, b.s), H(a.d, b.d)} / 32. Not symmetric.
double sim_ip(const RawAlert& a, const RawAlert& b);

// 1 - |a.d_port - b.d_port| / 65535.
double sim_port(const RawAlert& a, const RawAlert& b, double absent_similarity = 1.0);

// exp(-|a.t - b.t| / tau).
double sim_time(const RawAlert& a, const RawAlert& b, double tau);

double sim_total(const RawAlert& a, const RawAlert& b, const SimilarityConfig& cfg);

// Same as above with the stages already looked up.
double sim_total(const RawAlert& a, int stage_a, const RawAlert& b, int stage_b, const SimilarityConfig& cfg);

// Config file schema:
//   { "weights": {"event": .., "ip": .., "port": .., "time": ..},
//     "time_scale": 60, "absent_port_similarity": 1,
//     "stage_map": [ {"pattern": "ICMP PING*", "stage": 1}, ... ] }
// Missing keys keep their defaults.
nlohmann::json to_json(const SimilarityConfig& cfg);
SimilarityConfig similarity_config_from_json(const nlohmann::json& j);
StageMap stage_map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StageMap& map);
StageMap load_stage_map(const std::filesystem::path& path);

}  // namespace feint
