#include "feint/virtual_real.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "feint/errors.hpp"

namespace feint {

bool VirtualRealLib::invariants_hold() const {
  for (std::size_t i = 1; i < real.size(); ++i) {
    if (real[i - 1].confidence > real[i].confidence) return false;
  }
  for (std::size_t i = 1; i < virt.size(); ++i) {
    if (virt[i - 1].confidence < virt[i].confidence) return false;
  }
  std::set<std::string> ids;
  for (const auto& a : real) {
    if (a.kind != AttackKind::kReal) return false;
    ids.insert(a.record_id);
  }
  for (const auto& a : virt) {
    if (a.kind != AttackKind::kVirtual || ids.count(a.record_id)) return false;
  }
  return true;
}

VrConfig vr_config_from_json(const nlohmann::json& j) {
  VrConfig c;
  if (j.contains("cnn")) {
    const auto& n = j.at("cnn");
    c.cnn.input_side = n.value("input_side", c.cnn.input_side);
    c.cnn.filters1 = n.value("filters1", c.cnn.filters1);
    c.cnn.filters2 = n.value("filters2", c.cnn.filters2);
    c.cnn.dense = n.value("dense", c.cnn.dense);
    c.cnn.classes = n.value("classes", c.cnn.classes);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.epochs = t.value("epochs", c.train.epochs);
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.momentum = t.value("momentum", c.train.momentum);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.validation_fraction = t.value("validation_fraction", c.train.validation_fraction);
  }
  c.svm_c = j.value("svm_c", c.svm_c);
  if (j.contains("svm_g") && !j.at("svm_g").is_null() && j.at("svm_g") != "auto") c.svm_g = j.at("svm_g").get<double>();
  c.runs = j.value("runs", c.runs);
  c.normal_class = j.value("normal_class", c.normal_class);
  return c;
}

nlohmann::json to_json(const VrConfig& c) {
  return {{"cnn",
           {{"input_side", c.cnn.input_side},
            {"filters1", c.cnn.filters1},
            {"filters2", c.cnn.filters2},
            {"dense", c.cnn.dense},
            {"classes", c.cnn.classes}}},
          {"train",
           {{"epochs", c.train.epochs},
            {"learning_rate", c.train.learning_rate},
            {"momentum", c.train.momentum},
            {"batch_size", c.train.batch_size},
            {"validation_fraction", c.train.validation_fraction}}},
          {"svm_c", c.svm_c},
          {"svm_g", c.svm_g ? nlohmann::json(*c.svm_g) : nlohmann::json("auto")},
          {"runs", c.runs},
          {"normal_class", c.normal_class}};
}

std::string resolve_normal_class(const FlowDataset& ds, const std::string& requested) {
  if (!requested.empty()) {
    if (!ds.has_class(requested)) throw ArgumentError("normal class '" + requested + "' not in dataset");
    return requested;
  }
  for (const char* name : {"Normal", "Benign", "BENIGN", "normal", "benign"}) {
    if (ds.has_class(name)) return name;
  }
  throw ArgumentError("dataset has no Normal/Benign class");
}

namespace {

std::vector<nn::TensorD> flow_inputs(const FlowDataset& ds, nn::Index side) {
  std::vector<nn::TensorD> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(nn::reshape_flow<double>(ds.normalized(i), side));
  return out;
}

std::size_t class_index(const std::vector<std::string>& classes, const std::string& name) {
  return static_cast<std::size_t>(std::find(classes.begin(), classes.end(), name) - classes.begin());
}

}  // namespace

std::string VrClassifier::predict(const FlowDataset& ds, std::size_t i) const {
  const auto x = nn::reshape_flow<double>(ds.normalized(i), cnn.config().input_side);
  return svm.predict(cnn.features(x));
}

double VrClassifier::normal_probability(const FlowDataset& ds, std::size_t i) const {
  const auto x = nn::reshape_flow<double>(ds.normalized(i), cnn.config().input_side);
  return cnn.probabilities(x)[static_cast<Eigen::Index>(normal_index)];
}

VrClassifier train_vr_classifier(const FlowDataset& ds, const VrConfig& cfg, std::uint64_t seed) {
  if (ds.empty()) throw EmptyDatasetError("virtual-real: empty dataset");
  const std::string normal = resolve_normal_class(ds, cfg.normal_class);
  if (ds.class_names().size() < 2) throw ArgumentError("virtual-real: dataset needs at least one attack class");

  nn::CnnConfig cc = cfg.cnn;
  cc.classes = std::max<nn::Index>(cc.classes, static_cast<nn::Index>(ds.class_names().size()));
  VrClassifier out{nn::CnnFeatureExtractor<double>(cc, seed), {}, ds.class_names(), 0};
  out.normal_index = class_index(out.classes, normal);

  const auto inputs = flow_inputs(ds, cc.input_side);
  std::vector<int> labels;
  labels.reserve(ds.size());
  for (const auto& r : ds.records()) labels.push_back(static_cast<int>(class_index(out.classes, r.label)));
  nn::TrainConfig tc = cfg.train;
  tc.seed = seed;
  nn::train_softmax_head(out.cnn, inputs, labels, tc);

  svm::Mat<double> feats(static_cast<Eigen::Index>(ds.size()), cc.dense);
  std::vector<std::string> names;
  names.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    feats.row(static_cast<Eigen::Index>(i)) = out.cnn.features(inputs[i]).transpose();
    names.push_back(ds.records()[i].label);
  }
  const double g = cfg.svm_g ? *cfg.svm_g : 1.0 / static_cast<double>(cc.dense);
  out.svm = svm::train_multiclass<double>(feats, names, cfg.svm_c, g);
  return out;
}

std::vector<std::uint64_t> default_vr_seeds(std::uint64_t base, std::size_t runs) {
  std::vector<std::uint64_t> s(runs);
  for (std::size_t i = 0; i < runs; ++i) s[i] = base + i;
  return s;
}

VirtualRealLib lib_from_runs(const FlowDataset& ds, const std::string& normal_class,
                             const std::vector<std::uint64_t>& seeds, const VrRunLog& log) {
  const std::size_t runs = log.predictions.size();
  if (runs == 0) throw ArgumentError("virtual-real: no runs");
  if (log.normal_probability.size() != runs) throw ArgumentError("virtual-real: run log is ragged");
  const std::size_t n = ds.size();
  for (std::size_t r = 0; r < runs; ++r) {
    if (log.predictions[r].size() != n || log.normal_probability[r].size() != n) {
      throw ArgumentError("virtual-real: run " + std::to_string(r) + " does not cover the dataset");
    }
  }
  VirtualRealLib lib;
  lib.normal_class = normal_class;
  lib.seeds = seeds;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = ds.records()[i];
    if (rec.label == normal_class) continue;
    std::size_t normal_hits = 0, correct_hits = 0;
    double prob_sum = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
      normal_hits += log.predictions[r][i] == normal_class;
      correct_hits += log.predictions[r][i] == rec.label;
      prob_sum += log.normal_probability[r][i];
    }
    const double conf = prob_sum / static_cast<double>(runs);
    if (normal_hits == runs) {
      lib.real.push_back({rec.source_id, rec.label, conf, AttackKind::kReal});
    } else if (correct_hits == runs) {
      lib.virt.push_back({rec.source_id, rec.label, conf, AttackKind::kVirtual});
    }
  }
  std::stable_sort(lib.real.begin(), lib.real.end(),
                   [](const AtomicAttack& a, const AtomicAttack& b) { return a.confidence < b.confidence; });
  std::stable_sort(lib.virt.begin(), lib.virt.end(),
                   [](const AtomicAttack& a, const AtomicAttack& b) { return a.confidence > b.confidence; });
  return lib;
}

VirtualRealLib build_virtual_real_lib(const FlowDataset& ds, const VrConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds, VrRunLog* log) {
  if (seeds.empty()) throw ArgumentError("virtual-real: at least one seed is required");
  const auto normal = resolve_normal_class(ds, cfg.normal_class);
  const std::size_t n = ds.size();
  VrRunLog runs;
  for (const auto seed : seeds) {
    const auto clf = train_vr_classifier(ds, cfg, seed);
    std::vector<std::string> preds(n);
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] = clf.predict(ds, i);
      probs[i] = clf.normal_probability(ds, i);
    }
    runs.predictions.push_back(std::move(preds));
    runs.normal_probability.push_back(std::move(probs));
  }
  auto lib = lib_from_runs(ds, normal, seeds, runs);
  if (log) *log = std::move(runs);
  return lib;
}

double verify_real_lib(const VirtualRealLib& lib, const VrClassifier& classifier, const FlowDataset& ds) {
  if (lib.real.empty()) throw ArgumentError("verify_real_lib: the real lib is empty");
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < ds.size(); ++i) by_id.emplace(ds.records()[i].source_id, i);
  std::size_t missed = 0;
  for (const auto& a : lib.real) {
    const auto it = by_id.find(a.record_id);
    if (it == by_id.end()) throw ArgumentError("verify_real_lib: record '" + a.record_id + "' not in dataset");
    missed += classifier.predict(ds, it->second) == lib.normal_class;
  }
  return static_cast<double>(missed) / static_cast<double>(lib.real.size());
}

void write_vr_lib(std::ostream& out, const VirtualRealLib& lib) {
  out << "feint-vrlib 1\nnormal " << lib.normal_class << "\nseeds";
  for (const auto s : lib.seeds) out << ' ' << s;
  out << '\n';
  char buf[32];
  auto section = [&](const char* name, const std::vector<AtomicAttack>& items) {
    out << name << ' ' << items.size() << '\n';
    for (const auto& a : items) {
      std::snprintf(buf, sizeof buf, "%.17g", a.confidence);
      out << buf << '\t' << a.attack_type << '\t' << a.record_id << '\n';
    }
  };
  section("real", lib.real);
  section("virtual", lib.virt);
}

VirtualRealLib read_vr_lib(std::istream& in) {
  VirtualRealLib lib;
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw FormatError(std::string("vr lib: missing ") + what);
    return line;
  };
  if (next("header") != "feint-vrlib 1") throw FormatError("vr lib: unsupported header '" + line + "'");
  if (next("normal").rfind("normal ", 0) != 0) throw FormatError("vr lib: expected normal line");
  lib.normal_class = line.substr(7);
  if (next("seeds").rfind("seeds", 0) != 0) throw FormatError("vr lib: expected seeds line");
  {
    std::istringstream ss(line.substr(5));
    std::uint64_t s = 0;
    while (ss >> s) lib.seeds.push_back(s);
  }
  auto section = [&](const std::string& name, AttackKind kind, std::vector<AtomicAttack>& items) {
    next(name.c_str());
    if (line.rfind(name + " ", 0) != 0) throw FormatError("vr lib: expected section " + name);
    std::size_t n = 0;
    try {
      n = std::stoul(line.substr(name.size() + 1));
    } catch (const std::exception&) {
      throw FormatError("vr lib: bad count in section " + name);
    }
    for (std::size_t i = 0; i < n; ++i) {
      next("entry");
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) throw FormatError("vr lib: malformed entry '" + line + "'");
      AtomicAttack a;
      char* end = nullptr;
      const std::string conf = line.substr(0, t1);
      a.confidence = std::strtod(conf.c_str(), &end);
      if (end != conf.c_str() + conf.size()) throw FormatError("vr lib: bad confidence '" + conf + "'");
      a.attack_type = line.substr(t1 + 1, t2 - t1 - 1);
      a.record_id = line.substr(t2 + 1);
      a.kind = kind;
      items.push_back(std::move(a));
    }
  };
  section("real", AttackKind::kReal, lib.real);
  section("virtual", AttackKind::kVirtual, lib.virt);
  if (!lib.invariants_hold()) throw FormatError("vr lib: sort order or disjointness violated");
  return lib;
}

void save_vr_lib(const std::filesystem::path& path, const VirtualRealLib& lib) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_vr_lib(out, lib);
}

VirtualRealLib load_vr_lib(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_vr_lib(in);
}

}  // namespace feint
