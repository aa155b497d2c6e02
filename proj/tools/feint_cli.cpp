#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "feint/errors.hpp"
#include "feint/pipeline.hpp"

namespace {

const char* describe(const std::string& cmd) {
  if (cmd == "synth") return "generate the alert log and flow dataset";
  if (cmd == "parse") return "parse the fast-alert log into alerts.jsonl";
  if (cmd == "aggregate") return "merge repeated alerts";
  if (cmd == "cluster") return "group aggregates into attack sequences";
  if (cmd == "resample") return "rebalance flow classes";
  if (cmd == "train-extractor") return "train the CNN extractor and SVM, write test predictions";
  if (cmd == "build-vrlib") return "split attack records into virtual and real";
  if (cmd == "build-feintlib") return "build labelled feint and normal chains";
  if (cmd == "train-detector") return "train the chain detector";
  if (cmd == "detect") return "classify the held-out chains";
  if (cmd == "evaluate") return "compute metrics from persisted predictions";
  if (cmd == "run-all") return "run every stage after synth in order";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feint attack chain pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", feint::kVersion);

  std::string config_path;
  std::string out = "artifacts";
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  bool verbose = false;
  app.add_option("--config", config_path, "pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", out, "artifact directory")->capture_default_str();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--scale", scale, "desk-scale factor for dataset and chain counts");
  app.add_flag("--verbose", verbose, "print stage details");

  for (const auto& name : feint::command_names()) app.add_subcommand(name, describe(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    std::cerr << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 64;
  }

  try {
    feint::RunContext ctx;
    ctx.config = config_path.empty() ? feint::PipelineConfig{} : feint::load_pipeline_config(config_path);
    if (seed) ctx.config.seed = *seed;
    if (scale) ctx.config.scale = *scale;
    ctx.out = out;
    ctx.verbose = verbose;
    ctx.log = &std::cout;
    feint::run_command(app.get_subcommands().front()->get_name(), ctx);
  } catch (const std::exception& e) {
    std::cerr << feint::error_report(e).dump() << '\n';
    return feint::exit_code_for(e);
  }
  return 0;
}
