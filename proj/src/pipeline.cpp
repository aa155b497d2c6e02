#include "feint/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "feint/clustering.hpp"
#include "feint/csv.hpp"
#include "feint/errors.hpp"
#include "feint/json_io.hpp"
#include "feint/metrics.hpp"
#include "feint/nn/serialize.hpp"
#include "feint/rng.hpp"

namespace feint {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config

PipelineConfig::PipelineConfig() {
  resample.targets = {{"Normal", 240}, {"Infiltration", 90}, {"DDoS", 90}, {"PortScan", 60}};
  model.train.epochs = 10;
  model.train.learning_rate = 0.01;
  model.train.batch_size = 16;
}

nn::CnnConfig PipelineConfig::cnn_config(std::size_t classes) const {
  auto width = [&](nn::Index w) {
    return std::max<nn::Index>(1, static_cast<nn::Index>(std::llround(static_cast<double>(w) * filters_scale)));
  };
  nn::CnnConfig c = model.cnn;
  c.filters1 = width(model.cnn.filters1);
  c.filters2 = width(model.cnn.filters2);
  c.dense = width(model.cnn.dense);
  c.classes = std::max<nn::Index>(c.classes, static_cast<nn::Index>(classes));
  return c;
}

VrConfig PipelineConfig::vr_config(std::size_t classes) const {
  VrConfig v = model;
  v.cnn = cnn_config(classes);
  return v;
}

SimilarityConfig PipelineConfig::effective_similarity() const {
  SimilarityConfig s = similarity;
  if (!stage_map_path.empty()) s.stage_map = load_stage_map(stage_map_path);
  return s;
}

namespace {

std::size_t scaled(std::size_t n, double scale) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale)));
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) { return splitmix64(seed ^ fnv1a(stage)); }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

FlowScenarioSpec PipelineConfig::scaled_flow_spec() const {
  FlowScenarioSpec s = flow_spec;
  for (auto& c : s.classes) c.count = scaled(c.count, scale);
  s.seed = stage_seed(seed, "synth.flows") ^ flow_spec.seed;
  return s;
}

ResamplePlan PipelineConfig::scaled_plan() const {
  ResamplePlan p = resample;
  for (auto& [cls, n] : p.targets) n = scaled(n, scale);
  p.seed = stage_seed(seed, "resample") ^ resample.seed;
  return p;
}

std::vector<std::string> PipelineConfig::violations() const {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  auto collect = [&](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations()) bad.push_back(where + ": " + v);
    } catch (const std::exception& e) {
      bad.push_back(where + ": " + e.what());
    }
  };

  check(scale > 0.0 && std::isfinite(scale), "scale must be > 0");
  check(alert_log.empty() || fs::exists(alert_log), "paths.alert_log does not exist: " + alert_log.string());
  check(flows.empty() || fs::exists(flows), "paths.flows does not exist: " + flows.string());
  check(stage_map_path.empty() || fs::exists(stage_map_path),
        "paths.stage_map does not exist: " + stage_map_path.string());
  check(alert_fixture == "paper" || alert_fixture == "lldos", "synth.alerts must be \"paper\" or \"lldos\"");
  collect("synth.paper", [&] { paper.validate(); });
  collect("synth.lldos", [&] { lldos.validate(); });
  collect("synth.flows", [&] { flow_spec.validate(); });

  check(aggregation.window_seconds > 0.0, "aggregation.window_seconds must be > 0");
  check(aggregation.segment_prefix_bits >= 0 && aggregation.segment_prefix_bits <= 32,
        "aggregation.segment_prefix_bits must lie in 0..32");
  check(lambda >= 0.0 && lambda <= 1.0, "clustering.lambda must lie in [0, 1]");
  collect("clustering.similarity", [&] { similarity.validate(); });
  if (!stage_map_path.empty() && fs::exists(stage_map_path)) {
    collect("paths.stage_map", [&] { load_stage_map(stage_map_path); });
  }

  collect("resample", [&] { resample.validate(); });
  if (flows.empty()) {
    for (const auto& [cls, n] : resample.targets) {
      const bool known = std::any_of(flow_spec.classes.begin(), flow_spec.classes.end(),
                                     [&](const FlowClassSpec& c) { return c.name == cls; });
      check(known, "resample.targets names class '" + cls + "', which synth.flows does not produce");
    }
  }

  check(filters_scale > 0.0, "model.filters_scale must be > 0");
  check(model.cnn.input_side * model.cnn.input_side >= static_cast<nn::Index>(kFlowFeatureCount),
        "model.cnn.input_side must hold 83 features");
  check(model.cnn.input_side % 2 == 0, "model.cnn.input_side must be even");
  check(model.train.epochs >= 0, "model.train.epochs must be >= 0");
  check(model.train.learning_rate >= 0.0, "model.train.learning_rate must be >= 0");
  check(model.train.momentum >= 0.0 && model.train.momentum < 1.0, "model.train.momentum must lie in [0, 1)");
  check(model.train.batch_size >= 1, "model.train.batch_size must be >= 1");
  check(model.train.validation_fraction >= 0.0 && model.train.validation_fraction < 1.0,
        "model.train.validation_fraction must lie in [0, 1)");
  check(model.svm_c > 0.0, "model.svm_c must be > 0");
  check(!model.svm_g || *model.svm_g > 0.0, "model.svm_g must be > 0");
  check(model.runs >= 1, "model.runs must be >= 1");

  check(!c_grid.empty(), "extractor.c_grid must not be empty");
  for (double c : c_grid) check(c > 0.0, "extractor.c_grid values must be > 0");
  for (double g : g_grid) check(g > 0.0, "extractor.g_grid values must be > 0");
  check(folds >= 2, "extractor.folds must be >= 2");
  check(test_fraction > 0.0 && test_fraction < 1.0, "extractor.test_fraction must lie in (0, 1)");

  check(histogram_scale > 0.0, "feintlib.histogram_scale must be > 0");
  check(chain_length >= static_cast<std::size_t>(kMaxInsertions) + 1, "feintlib.length must be >= 9");

  check(detector.hidden >= 1, "detector.hidden must be >= 1");
  check(detector.svm_c > 0.0, "detector.svm_c must be > 0");
  check(detector.svm_g > 0.0, "detector.svm_g must be > 0");
  check(detector.epochs >= 0, "detector.epochs must be >= 0");
  check(detector.learning_rate >= 0.0, "detector.learning_rate must be >= 0");
  check(detector.batch_size >= 1, "detector.batch_size must be >= 1");
  check(detector.holdout_fraction >= 0.0 && detector.holdout_fraction < 1.0,
        "detector.holdout_fraction must lie in [0, 1)");
  check(detector.vocab_size >= 1, "detector.vocab_size must be >= 1");
  check(detector.clip_norm >= 0.0, "detector.clip_norm must be >= 0");
  return bad;
}

void PipelineConfig::validate() const {
  auto bad = violations();
  if (!bad.empty()) throw ConfigError(std::move(bad));
}

std::string PipelineConfig::hash() const { return hex(fnv1a(to_json(*this).dump())); }

namespace {

json paper_to_json(const PaperFixtureSpec& p) {
  return {{"raw_alerts", p.raw_alerts},   {"events", p.events},
          {"processes", p.processes},     {"multi_stage", p.multi_stage},
          {"multi_stage_events", p.multi_stage_events}, {"templates", p.templates},
          {"seed", p.seed}};
}

PaperFixtureSpec paper_from_json(const json& j) {
  PaperFixtureSpec p;
  p.raw_alerts = j.value("raw_alerts", p.raw_alerts);
  p.events = j.value("events", p.events);
  p.processes = j.value("processes", p.processes);
  p.multi_stage = j.value("multi_stage", p.multi_stage);
  p.multi_stage_events = j.value("multi_stage_events", p.multi_stage_events);
  p.templates = j.value("templates", p.templates);
  p.seed = j.value("seed", p.seed);
  return p;
}

void unknown_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed,
                  std::vector<std::string>& bad) {
  if (!j.is_object()) {
    bad.push_back((where.empty() ? std::string("config") : where) + " must be an object");
    return;
  }
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      bad.push_back("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

}  // namespace

json to_json(const PipelineConfig& c) {
  json model = to_json(c.model);
  model["filters_scale"] = c.filters_scale;
  json detector = to_json(c.detector);
  detector.erase("seed");  // each stage derives its own from the top-level seed
  return {{"seed", c.seed},
          {"scale", c.scale},
          {"paths",
           {{"alert_log", c.alert_log.string()}, {"flows", c.flows.string()}, {"stage_map", c.stage_map_path.string()}}},
          {"synth",
           {{"alerts", c.alert_fixture},
            {"paper", paper_to_json(c.paper)},
            {"lldos", to_json(c.lldos)},
            {"flows", to_json(c.flow_spec)}}},
          {"aggregation",
           {{"window_seconds", c.aggregation.window_seconds},
            {"segment_prefix_bits", c.aggregation.segment_prefix_bits}}},
          {"clustering", {{"lambda", c.lambda}, {"similarity", to_json(c.similarity)}}},
          {"resample", to_json(c.resample)},
          {"model", model},
          {"extractor",
           {{"c_grid", c.c_grid}, {"g_grid", c.g_grid}, {"folds", c.folds}, {"test_fraction", c.test_fraction}}},
          {"feintlib", {{"histogram_scale", c.histogram_scale}, {"length", c.chain_length}}},
          {"detector", detector}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  std::vector<std::string> bad;
  unknown_keys(j, "", {"seed", "scale", "paths", "synth", "aggregation", "clustering", "resample", "model",
                       "extractor", "feintlib", "detector"},
               bad);
  if (!bad.empty() && !j.is_object()) throw ConfigError(bad);

  auto section = [&](const char* name, std::initializer_list<const char*> keys, auto&& fn) {
    if (!j.contains(name)) return;
    const auto& s = j.at(name);
    const auto before = bad.size();
    if (keys.size() > 0) unknown_keys(s, name, keys, bad);
    if (bad.size() != before && !s.is_object()) return;
    try {
      fn(s);
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations()) bad.push_back(std::string(name) + ": " + v);
    } catch (const std::exception& e) {
      bad.push_back(std::string(name) + ": " + e.what());
    }
  };

  try {
    c.seed = j.value("seed", c.seed);
  } catch (const std::exception& e) {
    bad.push_back(std::string("seed: ") + e.what());
  }
  try {
    c.scale = j.value("scale", c.scale);
  } catch (const std::exception& e) {
    bad.push_back(std::string("scale: ") + e.what());
  }
  section("paths", {"alert_log", "flows", "stage_map"}, [&](const json& s) {
    c.alert_log = s.value("alert_log", std::string());
    c.flows = s.value("flows", std::string());
    c.stage_map_path = s.value("stage_map", std::string());
  });
  section("synth", {"alerts", "paper", "lldos", "flows"}, [&](const json& s) {
    c.alert_fixture = s.value("alerts", c.alert_fixture);
    if (s.contains("paper")) c.paper = paper_from_json(s.at("paper"));
    if (s.contains("lldos")) c.lldos = scenario_spec_from_json(s.at("lldos"));
    if (s.contains("flows")) c.flow_spec = flow_spec_from_json(s.at("flows"));
  });
  section("aggregation", {"window_seconds", "segment_prefix_bits"}, [&](const json& s) {
    c.aggregation.window_seconds = s.value("window_seconds", c.aggregation.window_seconds);
    c.aggregation.segment_prefix_bits = s.value("segment_prefix_bits", c.aggregation.segment_prefix_bits);
  });
  section("clustering", {"lambda", "similarity"}, [&](const json& s) {
    c.lambda = s.value("lambda", c.lambda);
    if (s.contains("similarity")) c.similarity = similarity_config_from_json(s.at("similarity"));
  });
  section("resample", {"targets", "k", "seed"}, [&](const json& s) {
    if (s.contains("targets")) c.resample.targets = s.at("targets").get<std::map<std::string, std::size_t>>();
    c.resample.k = s.value("k", c.resample.k);
    c.resample.seed = s.value("seed", c.resample.seed);
    c.resample.validate();
  });
  section("model", {"cnn", "train", "svm_c", "svm_g", "runs", "normal_class", "filters_scale"}, [&](const json& s) {
    c.model = vr_config_from_json(s);
    {
      const PipelineConfig d;
      const json t = s.value("train", json::object());
      if (!t.contains("epochs")) c.model.train.epochs = d.model.train.epochs;
      if (!t.contains("learning_rate")) c.model.train.learning_rate = d.model.train.learning_rate;
      if (!t.contains("batch_size")) c.model.train.batch_size = d.model.train.batch_size;
    }
    c.filters_scale = s.value("filters_scale", c.filters_scale);
  });
  section("extractor", {"c_grid", "g_grid", "folds", "test_fraction"}, [&](const json& s) {
    c.c_grid = s.value("c_grid", c.c_grid);
    c.g_grid = s.value("g_grid", c.g_grid);
    c.folds = s.value("folds", c.folds);
    c.test_fraction = s.value("test_fraction", c.test_fraction);
  });
  section("feintlib", {"histogram_scale", "length"}, [&](const json& s) {
    c.histogram_scale = s.value("histogram_scale", c.histogram_scale);
    c.chain_length = s.value("length", c.chain_length);
  });
  section("detector", {"hidden", "svm_c", "svm_g", "epochs", "learning_rate", "momentum", "batch_size",
                       "holdout_fraction", "vocab_size", "clip_norm"},
          [&](const json& s) { c.detector = detector_config_from_json(s); });

  auto more = c.violations();
  bad.insert(bad.end(), more.begin(), more.end());
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError({"config " + path.string() + " is not valid JSON: " + e.what()});
  }
  return pipeline_config_from_json(j);
}

// ---------------------------------------------------------------------------
// artifact plumbing

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Need {
  fs::path file;
  std::string stage;
};

void require(const std::vector<Need>& needs) {
  std::vector<std::string> missing;
  for (const auto& n : needs) {
    if (!fs::exists(n.file) && std::find(missing.begin(), missing.end(), n.stage) == missing.end()) {
      missing.push_back(n.stage);
    }
  }
  if (!missing.empty()) throw PrerequisiteError(missing);
}

class Stage {
 public:
  Stage(const RunContext& ctx, std::string name) : ctx_(ctx), name_(std::move(name)) {
    fs::create_directories(ctx_.out);
  }

  fs::path path(const std::string& artifact) const { return ctx_.out / artifact; }
  const PipelineConfig& cfg() const { return ctx_.config; }
  std::uint64_t seed(std::string_view sub = {}) const {
    return stage_seed(ctx_.config.seed, sub.empty() ? std::string_view(name_) : sub);
  }

  void input(const fs::path& p) { inputs_.push_back(p); }
  void output(const std::string& artifact) { outputs_.push_back(artifact); }

  void note(const std::string& line) const {
    if (ctx_.log) *ctx_.log << name_ << ": " << line << '\n';
  }
  void trace(const std::string& line) const {
    if (ctx_.verbose && ctx_.log) *ctx_.log << "  [" << name_ << "] " << line << '\n';
  }

  // <name>.manifest.json: version, config hash, seed, and content hashes of inputs and outputs.
  void finish(json summary = json::object()) const {
    json in = json::object();
    for (const auto& p : inputs_) {
      // inside the output directory the key is relative, so runs in different directories agree
      const auto rel = p.lexically_relative(ctx_.out);
      const bool inside = !rel.empty() && *rel.begin() != "..";
      const auto key = inside ? rel.generic_string() : p.string();
      in[key] = hex(fnv1a(read_file(p)));
    }
    json out = json::object();
    for (const auto& a : outputs_) {
      const auto p = path(a);
      if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(p)) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out[a + "/" + f.filename().string()] = hex(fnv1a(read_file(f)));
      } else {
        out[a] = hex(fnv1a(read_file(p)));
      }
    }
    write_json(path(name_ + ".manifest.json"), {{"command", name_},
                                                {"version", kVersion},
                                                {"config_hash", ctx_.config.hash()},
                                                {"seed", ctx_.config.seed},
                                                {"scale", ctx_.config.scale},
                                                {"inputs", in},
                                                {"artifacts", out},
                                                {"summary", summary}});
  }

 private:
  const RunContext& ctx_;
  std::string name_;
  std::vector<fs::path> inputs_;
  std::vector<std::string> outputs_;
};

fs::path alert_log_path(const RunContext& ctx) {
  return ctx.config.alert_log.empty() ? ctx.out / "alerts.log" : ctx.config.alert_log;
}

fs::path flows_path(const RunContext& ctx) {
  return ctx.config.flows.empty() ? ctx.out / "flows.csv" : ctx.config.flows;
}

std::string label_name(ChainLabel l) { return l == ChainLabel::kFeint ? "FEINT" : "NORMAL"; }

// Per-class shuffle, round(fraction * n) of each class to train; both lists ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_flows(const FlowDataset& ds, double train_fraction,
                                                                          std::uint64_t seed) {
  std::vector<std::size_t> train, test;
  std::uint64_t stream = 0;
  for (const auto& cls : ds.class_names()) {
    auto idx = ds.indices_of(cls);
    Rng rng = make_stream(seed, ++stream);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size());
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

// ---------------------------------------------------------------------------
// commands

void cmd_synth(const RunContext& ctx) {
  Stage st(ctx, "synth");
  const auto& cfg = st.cfg();
  json summary;
  if (cfg.alert_fixture == "paper") {
    PaperFixtureSpec spec = cfg.paper;
    spec.seed = st.seed("synth.alerts") ^ cfg.paper.seed;
    const auto fx = generate_paper_fixture(spec);
    write_file(st.path("alerts.log"), fx.text);
    write_json(st.path("alerts.truth.json"), {{"fixture", "paper"},
                                              {"event_of", fx.event_of},
                                              {"process_of_event", fx.process_of_event}});
    summary["alerts"] = fx.alerts.size();
    summary["events"] = fx.process_of_event.size();
  } else {
    ScenarioSpec spec = cfg.lldos;
    spec.seed = st.seed("synth.alerts") ^ cfg.lldos.seed;
    const auto log = generate_alert_log(spec);
    write_file(st.path("alerts.log"), log.text);
    json truth = to_json(log.truth);
    truth["fixture"] = "lldos";
    write_json(st.path("alerts.truth.json"), truth);
    summary["alerts"] = log.alerts.size();
  }
  const auto flows = generate_flow_dataset(cfg.scaled_flow_spec());
  write_flow_csv(st.path("flows.csv"), flows);
  summary["flows"] = flows.size();
  st.output("alerts.log");
  st.output("alerts.truth.json");
  st.output("flows.csv");
  st.note(std::to_string(summary["alerts"].get<std::size_t>()) + " alerts, " + std::to_string(flows.size()) +
          " flow records");
  st.finish(summary);
}

void cmd_parse(const RunContext& ctx) {
  Stage st(ctx, "parse");
  const auto src = alert_log_path(ctx);
  require({{src, "synth"}});
  st.input(src);
  const auto log = parse_alert_text(read_file(src));
  std::string out;
  for (const auto& a : log.alerts) {
    out += json(a).dump();
    out += '\n';
  }
  write_file(st.path("alerts.jsonl"), out);
  json warnings = json::array();
  for (const auto& w : log.warnings) warnings.push_back({{"line", w.line_number}, {"message", w.message}});
  write_json(st.path("parse.report.json"), {{"alerts", log.alerts.size()}, {"warnings", warnings}});
  st.output("alerts.jsonl");
  st.output("parse.report.json");
  st.note(std::to_string(log.alerts.size()) + " alerts, " + std::to_string(log.warnings.size()) + " warnings");
  st.finish({{"alerts", log.alerts.size()}, {"warnings", log.warnings.size()}});
}

std::vector<RawAlert> read_alerts_jsonl(const fs::path& p) {
  std::vector<RawAlert> alerts;
  std::istringstream in(read_file(p));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      alerts.push_back(json::parse(line).get<RawAlert>());
    } catch (const json::exception& e) {
      throw FormatError(p.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return alerts;
}

void cmd_aggregate(const RunContext& ctx) {
  Stage st(ctx, "aggregate");
  require({{st.path("alerts.jsonl"), "parse"}});
  st.input(st.path("alerts.jsonl"));
  const auto alerts = read_alerts_jsonl(st.path("alerts.jsonl"));
  const auto res = aggregate(alerts, st.cfg().aggregation);
  {
    std::ofstream out(st.path("aggregates.jsonl"), std::ios::binary);
    if (!out) throw IoError("cannot write aggregates.jsonl");
    write_aggregates_jsonl(out, res.alerts);
  }
  const json report = {{"raw", res.report.raw_count}, {"aggregates", res.report.output_count}, {"rate", res.report.rate}};
  write_json(st.path("aggregate.report.json"), report);
  st.output("aggregates.jsonl");
  st.output("aggregate.report.json");
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu -> %zu alerts, rate %.4f%%", res.report.raw_count, res.report.output_count,
                100.0 * res.report.rate);
  st.note(buf);
  st.finish(report);
}

void cmd_cluster(const RunContext& ctx) {
  Stage st(ctx, "cluster");
  require({{st.path("aggregates.jsonl"), "aggregate"}});
  st.input(st.path("aggregates.jsonl"));
  std::vector<AggregatedAlert> aggs;
  {
    std::ifstream in(st.path("aggregates.jsonl"));
    aggs = read_aggregates_jsonl(in);
  }
  std::vector<RawAlert> reps;
  reps.reserve(aggs.size());
  for (const auto& a : aggs) reps.push_back(a.representative);
  const auto sim = st.cfg().effective_similarity();
  const auto all = fuzzy_cluster(reps, st.cfg().lambda, sim);
  const auto pruned = prune_singletons(all);
  const auto patterns = extract_patterns(pruned, sim.stage_map);
  {
    std::ofstream out(st.path("sequences.json"), std::ios::binary);
    write_sequences_json(out, pruned);
  }
  write_file(st.path("patterns.txt"), format_pattern_table(patterns));
  const json report = {{"alerts", reps.size()},
                       {"sequences", all.sequences.size()},
                       {"multi_stage_sequences", pruned.sequences.size()},
                       {"patterns", patterns.size()}};
  write_json(st.path("cluster.report.json"), report);
  st.output("sequences.json");
  st.output("patterns.txt");
  st.output("cluster.report.json");
  st.note(std::to_string(all.sequences.size()) + " sequences, " + std::to_string(pruned.sequences.size()) +
          " multi-stage, " + std::to_string(patterns.size()) + " patterns");
  st.finish(report);
}

json class_counts(const FlowDataset& ds) {
  json j = json::object();
  for (const auto& c : ds.class_names()) j[c] = ds.count(c);
  return j;
}

void cmd_resample(const RunContext& ctx) {
  Stage st(ctx, "resample");
  const auto src = flows_path(ctx);
  require({{src, "synth"}});
  st.input(src);
  auto ds = load_flow_csv(src);
  const json before = class_counts(ds);
  const auto plan = st.cfg().scaled_plan();
  ds = apply_plan(std::move(ds), plan);
  write_flow_csv(st.path("flows.resampled.csv"), ds);
  const json report = {{"before", before}, {"after", class_counts(ds)}, {"plan", to_json(plan)}};
  write_json(st.path("resample.report.json"), report);
  st.output("flows.resampled.csv");
  st.output("resample.report.json");
  st.note(std::to_string(ds.size()) + " records after resampling");
  st.finish(report);
}

std::vector<nn::TensorD> inputs_of(const FlowDataset& ds, nn::Index side) {
  std::vector<nn::TensorD> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(nn::reshape_flow<double>(ds.normalized(i), side));
  return out;
}

void cmd_train_extractor(const RunContext& ctx) {
  Stage st(ctx, "train-extractor");
  require({{st.path("flows.resampled.csv"), "resample"}});
  st.input(st.path("flows.resampled.csv"));
  const auto& cfg = st.cfg();
  const auto ds = load_flow_csv(st.path("flows.resampled.csv"));
  const auto classes = ds.class_names();
  const auto [train, test] = split_flows(ds, 1.0 - cfg.test_fraction, st.seed("train-extractor.split"));

  const auto cc = cfg.cnn_config(classes.size());
  nn::CnnFeatureExtractor<double> cnn(cc, st.seed("train-extractor.init"));
  const auto inputs = inputs_of(ds, cc.input_side);
  std::vector<nn::TensorD> train_in;
  std::vector<int> train_y;
  std::vector<std::string> train_names;
  for (const auto i : train) {
    train_in.push_back(inputs[i]);
    const auto& label = ds.records()[i].label;
    train_y.push_back(static_cast<int>(std::find(classes.begin(), classes.end(), label) - classes.begin()));
    train_names.push_back(label);
  }
  nn::TrainConfig tc = cfg.model.train;
  tc.seed = st.seed("train-extractor.sgd");
  const auto report = nn::train_softmax_head(cnn, train_in, train_y, tc);
  st.trace("extractor trained for " + std::to_string(report.curve.size()) + " epochs");

  svm::Mat<double> feats(static_cast<Eigen::Index>(train.size()), cc.dense);
  for (std::size_t k = 0; k < train.size(); ++k) feats.row(static_cast<Eigen::Index>(k)) = cnn.features(train_in[k]).transpose();

  std::vector<double> g_grid = cfg.g_grid;
  if (g_grid.empty()) g_grid = {1.0 / static_cast<double>(cc.dense)};
  double best_c = *std::min_element(cfg.c_grid.begin(), cfg.c_grid.end());
  double best_g = *std::min_element(g_grid.begin(), g_grid.end());
  json grid = json::array();
  std::size_t smallest = train.size();
  for (const auto& c : classes) {
    smallest = std::min<std::size_t>(smallest, static_cast<std::size_t>(
                                                   std::count(train_names.begin(), train_names.end(), c)));
  }
  const std::size_t folds = std::min(cfg.folds, smallest);
  if ((cfg.c_grid.size() > 1 || g_grid.size() > 1) && folds >= 2) {
    const auto gr = svm::grid_search_cv<double>(feats, train_names, folds, cfg.c_grid, g_grid,
                                                st.seed("train-extractor.cv"));
    best_c = gr.best_c;
    best_g = gr.best_g;
    for (const auto& p : gr.all) grid.push_back({{"c", p.c}, {"g", p.g}, {"accuracy", p.accuracy}});
  }
  const auto model = svm::train_multiclass<double>(feats, train_names, best_c, best_g);

  nn::save_param_file(st.path("extractor.bin"), cnn.to_param_file());
  {
    std::ofstream out(st.path("extractor.svm"), std::ios::binary);
    svm::write_model(out, model);
  }
  {
    std::ofstream out(st.path("extractor.loss.csv"), std::ios::binary);
    nn::write_loss_curve_csv(out, report);
  }
  std::string pred = "record,source_id,actual,predicted\n";
  std::size_t correct = 0;
  for (const auto i : test) {
    const auto& r = ds.records()[i];
    const auto& p = model.predict(cnn.features(inputs[i]));
    correct += p == r.label;
    pred += std::to_string(i) + "," + csv::escape(r.source_id) + "," + csv::escape(r.label) + "," + csv::escape(p) +
            "\n";
  }
  write_file(st.path("predictions.csv"), pred);
  const double acc = test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
  const json summary = {{"train", train.size()},   {"test", test.size()},  {"test_accuracy", acc},
                        {"svm_c", best_c},         {"svm_g", best_g},      {"grid", grid},
                        {"filters1", cc.filters1}, {"filters2", cc.filters2}, {"dense", cc.dense}};
  write_json(st.path("extractor.report.json"), summary);
  for (const auto* a : {"extractor.bin", "extractor.svm", "extractor.loss.csv", "predictions.csv",
                        "extractor.report.json"}) {
    st.output(a);
  }
  st.note("test accuracy " + num(acc) + " on " + std::to_string(test.size()) + " records");
  st.finish(summary);
}

void cmd_build_vrlib(const RunContext& ctx) {
  Stage st(ctx, "build-vrlib");
  require({{st.path("flows.resampled.csv"), "resample"}});
  st.input(st.path("flows.resampled.csv"));
  const auto ds = load_flow_csv(st.path("flows.resampled.csv"));
  const auto vc = st.cfg().vr_config(ds.class_names().size());
  const auto seeds = default_vr_seeds(st.seed(), vc.runs);
  VrRunLog log;
  const auto lib = build_virtual_real_lib(ds, vc, seeds, &log);
  save_vr_lib(st.path("vrlib.txt"), lib);
  std::string runs = "run,record,source_id,label,predicted,normal_probability\n";
  for (std::size_t r = 0; r < log.predictions.size(); ++r) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& rec = ds.records()[i];
      runs += std::to_string(r) + "," + std::to_string(i) + "," + csv::escape(rec.source_id) + "," +
              csv::escape(rec.label) + "," + csv::escape(log.predictions[r][i]) + "," +
              num(log.normal_probability[r][i]) + "\n";
    }
  }
  write_file(st.path("vrlib.runs.csv"), runs);
  st.output("vrlib.txt");
  st.output("vrlib.runs.csv");
  const json summary = {{"real", lib.real.size()}, {"virtual", lib.virt.size()}, {"runs", seeds.size()}};
  st.note(std::to_string(lib.real.size()) + " real, " + std::to_string(lib.virt.size()) + " virtual");
  st.finish(summary);
}

void cmd_build_feintlib(const RunContext& ctx) {
  Stage st(ctx, "build-feintlib");
  require({{st.path("sequences.json"), "cluster"}, {st.path("vrlib.txt"), "build-vrlib"}});
  st.input(st.path("sequences.json"));
  st.input(st.path("vrlib.txt"));
  AttackSequenceSet seqs;
  {
    std::ifstream in(st.path("sequences.json"));
    seqs = read_sequences_json(in);
  }
  const auto vr = load_vr_lib(st.path("vrlib.txt"));
  ChainOptions opts;
  opts.length = st.cfg().chain_length;
  opts.stage_map = st.cfg().effective_similarity().stage_map;
  const auto hist = scale_histogram(default_insertion_histogram(), st.cfg().histogram_scale * st.cfg().scale);
  const auto lib = build_feint_lib(seqs, vr, hist, st.seed(), opts);
  {
    std::ofstream out(st.path("feintlib.csv"), std::ios::binary);
    write_feint_lib_csv(out, lib);
  }
  st.output("feintlib.csv");
  std::size_t feint = 0;
  for (const auto& c : lib.chains) feint += c.label == ChainLabel::kFeint;
  const json summary = {{"chains", lib.chains.size()},
                        {"feint", feint},
                        {"normal", lib.chains.size() - feint},
                        {"train", lib.train.size()},
                        {"test", lib.test.size()}};
  st.note(std::to_string(lib.chains.size()) + " chains (" + std::to_string(feint) + " feint)");
  st.finish(summary);
}

FeintLib load_feint_lib(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  return read_feint_lib_csv(in);
}

void cmd_train_detector(const RunContext& ctx) {
  Stage st(ctx, "train-detector");
  require({{st.path("feintlib.csv"), "build-feintlib"}});
  st.input(st.path("feintlib.csv"));
  const auto lib = load_feint_lib(st.path("feintlib.csv"));
  DetectorConfig dc = st.cfg().detector;
  dc.seed = st.seed();
  DetectorTrainLog log;
  const auto det = train_detector(lib, dc, &log);
  fs::remove_all(st.path("detector"));
  det.save(st.path("detector"));
  std::string loss = "epoch,loss\n";
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) loss += std::to_string(e + 1) + "," + num(log.epoch_loss[e]) + "\n";
  write_file(st.path("detector.loss.csv"), loss);
  st.output("detector");
  st.output("detector.loss.csv");
  st.note("validation accuracy " + num(det.validation_accuracy()));
  st.finish({{"validation_accuracy", det.validation_accuracy()}, {"epochs", log.epoch_loss.size()}});
}

void cmd_detect(const RunContext& ctx) {
  Stage st(ctx, "detect");
  require({{st.path("feintlib.csv"), "build-feintlib"}, {st.path("detector/detector.bin"), "train-detector"}});
  st.input(st.path("feintlib.csv"));
  for (const auto* f : {"detector/detector.bin", "detector/detector.svm", "detector/detector.json"}) st.input(st.path(f));
  const auto lib = load_feint_lib(st.path("feintlib.csv"));
  const auto det = ChainDetector::load(st.path("detector"));
  std::string out = "chain,actual,predicted,decision\n";
  std::size_t correct = 0;
  for (const auto i : lib.test) {
    const auto d = det.detect(lib.chains[i]);
    correct += d.label == lib.chains[i].label;
    out += std::to_string(i) + "," + label_name(lib.chains[i].label) + "," + label_name(d.label) + "," + num(d.decision) +
           "\n";
  }
  write_file(st.path("detections.csv"), out);
  st.output("detections.csv");
  const double acc = lib.test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(lib.test.size());
  st.note("test accuracy " + num(acc) + " on " + std::to_string(lib.test.size()) + " chains");
  st.finish({{"test", lib.test.size()}, {"accuracy", acc}});
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty()) rows.push_back(csv::split(line));
  }
  return rows;
}

json ratio(const Ratio& r) { return r.undefined ? json(nullptr) : json(r.value); }

json confusion_json(const ConfusionMatrix& m) {
  json classes = json::array();
  for (std::size_t k = 0; k < m.classes().size(); ++k) {
    classes.push_back({{"class", m.classes()[k]},
                       {"actual", m.actual(k)},
                       {"predicted", m.predicted(k)},
                       {"recall", ratio(m.recall(k))},
                       {"precision", ratio(m.precision(k))}});
  }
  json counts = json::array();
  for (Eigen::Index r = 0; r < m.counts().rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.counts().cols(); ++c) row.push_back(m.counts()(r, c));
    counts.push_back(row);
  }
  return {{"accuracy", ratio(m.accuracy())}, {"total", m.total()}, {"classes", classes}, {"counts", counts}};
}

void cmd_evaluate(const RunContext& ctx) {
  Stage st(ctx, "evaluate");
  require({{st.path("predictions.csv"), "train-extractor"}, {st.path("detections.csv"), "detect"}});
  st.input(st.path("predictions.csv"));
  st.input(st.path("detections.csv"));

  std::vector<std::string> actual, predicted;
  for (const auto& row : read_csv_rows(st.path("predictions.csv"))) {
    if (row.size() != 4) throw FormatError("predictions.csv: expected 4 columns");
    actual.push_back(row[2]);
    predicted.push_back(row[3]);
  }
  std::set<std::string> names(actual.begin(), actual.end());
  names.insert(predicted.begin(), predicted.end());
  const auto flow_cm = ConfusionMatrix::from_labels(actual, predicted, {names.begin(), names.end()});

  std::vector<std::string> chain_actual, chain_pred;
  for (const auto& row : read_csv_rows(st.path("detections.csv"))) {
    if (row.size() != 4) throw FormatError("detections.csv: expected 4 columns");
    chain_actual.push_back(row[1]);
    chain_pred.push_back(row[2]);
  }
  const auto chain_cm = ConfusionMatrix::from_labels(chain_actual, chain_pred, {"NORMAL", "FEINT"});
  DetectionCounts dc;
  dc.n = static_cast<std::size_t>(chain_cm.actual(1));
  dc.rn = static_cast<std::size_t>(chain_cm.predicted(1));
  dc.r = static_cast<std::size_t>(chain_cm.counts()(1, 1));
  json detection = confusion_json(chain_cm);
  detection["completeness"] = dc.n ? json(completeness(dc)) : json(nullptr);
  detection["accuracy_rate"] = dc.rn ? json(accuracy_rate(dc)) : json(nullptr);

  json report = {{"version", kVersion},
                 {"config_hash", st.cfg().hash()},
                 {"extractor", confusion_json(flow_cm)},
                 {"detection", detection}};
  for (const auto* name : {"aggregate", "cluster", "resample"}) {
    const auto p = st.path(std::string(name) + ".report.json");
    if (fs::exists(p)) {
      st.input(p);
      report[name] = read_json(p);
    }
  }
  if (fs::exists(st.path("build-vrlib.manifest.json"))) {
    report["vrlib"] = read_json(st.path("build-vrlib.manifest.json")).at("summary");
  }
  write_json(st.path("evaluation.json"), report);

  std::string text = "flow classification (rows actual, columns predicted)\n" + flow_cm.to_table() +
                     "\nfeint chain detection (rows actual, columns predicted)\n" + chain_cm.to_table();
  write_file(st.path("report.txt"), text);
  write_file(st.path("extractor.confusion.csv"), flow_cm.to_csv());
  write_file(st.path("detection.confusion.csv"), chain_cm.to_csv());
  for (const auto* a : {"evaluation.json", "report.txt", "extractor.confusion.csv", "detection.confusion.csv"}) {
    st.output(a);
  }
  const auto flow_acc = flow_cm.accuracy();
  const auto chain_acc = chain_cm.accuracy();
  st.note("flow accuracy " + num(flow_acc.value) + ", chain accuracy " + num(chain_acc.value));
  st.finish({{"flow_accuracy", ratio(flow_acc)}, {"chain_accuracy", ratio(chain_acc)}});
}

using Command = void (*)(const RunContext&);

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"synth", cmd_synth},
      {"parse", cmd_parse},
      {"aggregate", cmd_aggregate},
      {"cluster", cmd_cluster},
      {"resample", cmd_resample},
      {"train-extractor", cmd_train_extractor},
      {"build-vrlib", cmd_build_vrlib},
      {"build-feintlib", cmd_build_feintlib},
      {"train-detector", cmd_train_detector},
      {"detect", cmd_detect},
      {"evaluate", cmd_evaluate},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> order = {"parse",          "aggregate",      "cluster",        "resample",
                                                 "train-extractor", "build-vrlib",   "build-feintlib", "train-detector",
                                                 "detect",          "evaluate"};
  return order;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {"synth"};
    n.insert(n.end(), pipeline_stages().begin(), pipeline_stages().end());
    n.push_back("run-all");
    return n;
  }();
  return names;
}

void run_command(const std::string& name, const RunContext& ctx) {
  ctx.config.validate();
  if (name == "run-all") {
    for (const auto& stage : pipeline_stages()) commands().at(stage)(ctx);
    Stage st(ctx, "run-all");
    for (const auto& stage : pipeline_stages()) st.input(ctx.out / (stage + ".manifest.json"));
    st.finish();
    return;
  }
  const auto it = commands().find(name);
  if (it == commands().end()) throw ArgumentError("unknown command: " + name);
  it->second(ctx);
}

json error_report(const std::exception& e) {
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    return {{"error", "config"}, {"message", e.what()}, {"violations", c->violations()}};
  }
  if (const auto* p = dynamic_cast<const PrerequisiteError*>(&e)) {
    return {{"error", "prerequisite"}, {"message", e.what()}, {"missing", p->missing()}};
  }
  std::string kind = "internal";
  if (dynamic_cast<const IoError*>(&e)) kind = "io";
  else if (dynamic_cast<const ParseError*>(&e)) kind = "parse";
  else if (dynamic_cast<const SchemaError*>(&e)) kind = "schema";
  else if (dynamic_cast<const EmptyDatasetError*>(&e)) kind = "empty_dataset";
  else if (dynamic_cast<const FormatError*>(&e)) kind = "format";
  else if (dynamic_cast<const TrainingError*>(&e)) kind = "training";
  else if (dynamic_cast<const ConvergenceError*>(&e)) kind = "convergence";
  else if (dynamic_cast<const std::invalid_argument*>(&e)) kind = "argument";
  return {{"error", kind}, {"message", e.what()}};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const PrerequisiteError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 4;
  return 1;
}

}  // namespace feint
