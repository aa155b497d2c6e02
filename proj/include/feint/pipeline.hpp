#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "feint/aggregation.hpp"
#include "feint/feint_chain.hpp"
#include "feint/resample.hpp"
#include "feint/similarity.hpp"
#include "feint/synth.hpp"
#include "feint/virtual_real.hpp"

namespace feint {

inline constexpr const char* kVersion = "feint 0.1.0";

// Everything a pipeline run depends on. Flow counts, resample targets and the
// insertion histogram are multiplied by scale when a stage runs.
struct PipelineConfig {
  std::uint64_t seed = 1;
  double scale = 1.0;

  // inputs; empty means the synth artifact in the output directory
  std::filesystem::path alert_log;
  std::filesystem::path flows;

  std::string alert_fixture = "paper";  // "paper" or "lldos"
  PaperFixtureSpec paper;
  ScenarioSpec lldos;
  FlowScenarioSpec flow_spec = overlap_flow_spec();

  AggregationOptions aggregation;
  double lambda = 0.6;
  SimilarityConfig similarity;
  std::filesystem::path stage_map_path;

  ResamplePlan resample;

  double filters_scale = 0.25;  // CNN widths relative to 32/64/512
  VrConfig model;               // cnn widths are derived from filters_scale
  std::vector<double> c_grid = svm::default_c_grid();
  std::vector<double> g_grid = svm::default_g_grid();  // empty: 1 / dense width
  std::size_t folds = 3;
  double test_fraction = 0.2;

  double histogram_scale = 0.05;
  std::size_t chain_length = kChainLength;
  DetectorConfig detector;

  PipelineConfig();

  nn::CnnConfig cnn_config(std::size_t classes) const;
  VrConfig vr_config(std::size_t classes) const;
  SimilarityConfig effective_similarity() const;
  FlowScenarioSpec scaled_flow_spec() const;
  ResamplePlan scaled_plan() const;

  // Every violation, empty when the config is usable.
  std::vector<std::string> violations() const;
  void validate() const;  // throws ConfigError

  std::string hash() const;  // hex FNV-1a of the canonical JSON
};

// Keys missing from j keep their defaults; unknown or mistyped keys are collected
// into the thrown ConfigError together with range violations.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct RunContext {
  PipelineConfig config;
  std::filesystem::path out = "artifacts";
  bool verbose = false;
  std::ostream* log = nullptr;  // progress and summaries
};

// Stage order of a full run, synth excluded.
const std::vector<std::string>& pipeline_stages();
const std::vector<std::string>& command_names();

// Runs one command and writes its artifacts plus <command>.manifest.json.
void run_command(const std::string& name, const RunContext& ctx);

// Machine-readable description of an exception for stderr.
nlohmann::json error_report(const std::exception& e);
int exit_code_for(const std::exception& e);

}  // namespace feint
