#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "feint/alert.hpp"
#include "feint/flow.hpp"

namespace feint {

struct PhaseTemplate {
  std::string attack_type;
  int stage = 1;
  Protocol protocol = Protocol::kTcp;
  std::uint16_t d_port = 0;  // ignored for ICMP
  std::uint32_t sid = 0;
  std::string classification;
  int priority = 2;
  bool from_inside = false;  // source is a compromised inside host rather than the attacker
};

// Sweep, sadmind ping, sadmind overflow, rsh, mstream.
std::vector<PhaseTemplate> lldos_phases();

// Interleaved attack processes on a fixed time lattice plus noise alerts. Events of
// different processes (or noise) are always at least two slots apart, events of one
// process are emitted in blocks and a stage change always follows its predecessor
// in the next slot. Each process owns a distinct first-octet address group, so at
// most four processes are supported.
struct ScenarioSpec {
  std::vector<PhaseTemplate> phases = lldos_phases();
  std::vector<std::size_t> events_per_phase = {3, 2, 2, 2, 2};
  std::size_t processes = 2;
  double noise_rate = 0.35;     // chance of a noise alert after each block
  double slot_seconds = 38.0;
  std::size_t max_noise = 64;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruth {
  std::size_t processes = 0;
  std::vector<std::size_t> process_of;  // per alert; ids >= processes are noise, one id each
};

struct GeneratedLog {
  std::vector<RawAlert> alerts;  // time order
  std::string text;              // fast-alert lines
  GroundTruth truth;
};

GeneratedLog generate_alert_log(const ScenarioSpec& spec);

nlohmann::json to_json(const GroundTruth& t);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

// Large fixture with exact counts: raw alerts that aggregate down to the event count,
// events that cluster into multi-stage processes plus singletons, and a fixed number
// of multi-stage templates.
struct PaperFixtureSpec {
  std::size_t raw_alerts = 17169;
  std::size_t events = 3222;
  std::size_t processes = 944;
  std::size_t multi_stage = 195;
  std::size_t multi_stage_events = 2473;
  std::size_t templates = 9;
  std::uint64_t seed = 7;

  void validate() const;
};

struct PaperFixture {
  std::vector<RawAlert> alerts;             // time order
  std::string text;
  std::vector<std::size_t> event_of;        // per raw alert: designed event id
  std::vector<std::size_t> process_of_event;
  std::vector<std::size_t> template_of_process;  // npos for singletons
};

std::vector<std::vector<PhaseTemplate>> multi_stage_templates();

PaperFixture generate_paper_fixture(const PaperFixtureSpec& spec = {});

// Flow classes drawn from isotropic Gaussians over all 83 features.
enum class FlowGeometry { kNormal, kHard, kSeparable };

struct FlowClassSpec {
  std::string name;
  std::size_t count = 0;
  FlowGeometry geometry = FlowGeometry::kSeparable;
};

struct FlowScenarioSpec {
  std::vector<FlowClassSpec> classes;
  double sigma = 1.0;
  double separation = 10.0;   // centroid distance of separable classes from Normal, in sigma
  double hard_offset = 0.05;  // centroid distance of the hard class from Normal, in sigma
  double base_level = 50.0;
  std::uint64_t seed = 11;

  void validate() const;
};

// Normal 300, one hard class, two separable classes.
FlowScenarioSpec overlap_flow_spec(double scale = 1.0);

// Class sizes of the large intrusion training set (Benign 1886428 ... Heartbleed 8), scaled.
FlowScenarioSpec table4_flow_spec(double scale = 1.0);

// Per-class resample targets for that set: the largest classes are downsampled, the
// rarest (Infiltration, SQLInjection, Heartbleed) oversampled tenfold.
std::map<std::string, std::size_t> table4_targets(double scale = 1.0);

// Centroid of class k as designed.
Eigen::VectorXd flow_class_mean(const FlowScenarioSpec& spec, std::size_t k);

FlowDataset generate_flow_dataset(const FlowScenarioSpec& spec);

FlowScenarioSpec flow_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FlowScenarioSpec& s);
ScenarioSpec scenario_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioSpec& s);

}  // namespace feint
