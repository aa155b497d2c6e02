#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("feint_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run feint(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(FEINT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_CASE("stage without its prerequisite names the missing stage") {
  const auto dir = scratch("prereq");
  const auto r = feint("--out " + (dir / "art").string() + " cluster", dir);
  CHECK(r.code == 3);
  const auto report = nlohmann::json::parse(r.err);
  CHECK(report.at("error") == "prerequisite");
  const auto missing = report.at("missing").dump();
  CHECK(missing.find("aggregate") != std::string::npos);
}

TEST_CASE("invalid config lists every violation") {
  const auto dir = scratch("config");
  std::ofstream(dir / "bad.json") << R"({"scale": -1, "clustering": {"lambda": 3}, "bogus": 1})";
  const auto r = feint("--config " + (dir / "bad.json").string() + " --out " + (dir / "art").string() + " synth", dir);
  CHECK(r.code == 2);
  const auto report = nlohmann::json::parse(r.err);
  CHECK(report.at("error") == "config");
  CHECK(report.at("violations").size() >= 3);
}

TEST_CASE("usage errors") {
  const auto dir = scratch("usage");
  CHECK(feint("no-such-command", dir).code == 64);
  CHECK(feint("--version", dir).out.find("feint") != std::string::npos);
}

TEST_CASE("synth then run-all completes") {
  const auto dir = scratch("runall");
  std::ofstream(dir / "cfg.json") << R"({"scale": 0.5, "synth": {"alerts": "lldos"}, "model": {"runs": 3}})";
  const std::string common = "--config " + (dir / "cfg.json").string() + " --out " + (dir / "art").string();
  const auto s = feint(common + " synth", dir);
  REQUIRE(s.code == 0);
  CHECK(fs::exists(dir / "art" / "alerts.log"));
  CHECK(fs::exists(dir / "art" / "flows.csv"));
  const auto r = feint(common + " run-all", dir);
  INFO(r.err);
  REQUIRE(r.code == 0);
  for (const char* f : {"alerts.jsonl", "aggregates.jsonl", "sequences.json", "patterns.txt", "flows.resampled.csv",
                        "extractor.bin", "vrlib.txt", "feintlib.csv", "detector/detector.bin", "detections.csv",
                        "evaluation.json", "report.txt", "run-all.manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "art" / f), f);
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "art" / "evaluate.manifest.json"));
  CHECK(manifest.at("command") == "evaluate");
  CHECK(manifest.contains("config_hash"));
  const auto eval = nlohmann::json::parse(slurp(dir / "art" / "evaluation.json"));
  CHECK(eval.contains("detection"));
}
