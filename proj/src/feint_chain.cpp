#include "feint/feint_chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "feint/csv.hpp"
#include "feint/errors.hpp"
#include "feint/nn/serialize.hpp"
#include "feint/rng.hpp"

namespace feint {

namespace {

constexpr std::int64_t kDetectorParamKind = 3;

std::vector<ChainEvent> base_events(const AttackSequence& base, const VirtualRealLib& lib, std::size_t keep,
                                    Rng& rng, const ChainOptions& opts) {
  std::vector<ChainEvent> out;
  const std::size_t n = std::min(keep, base.alerts.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ChainEvent e;
    e.attack_type = base.alerts[i].attack_type;
    e.stage = i < base.stages.size() ? base.stages[i] : stage_of(e.attack_type, opts.stage_map).stage;
    if (!lib.virt.empty()) {
      e.confidence = lib.virt[std::uniform_int_distribution<std::size_t>(0, lib.virt.size() - 1)(rng)].confidence;
    }
    out.push_back(std::move(e));
  }
  return out;
}

void pad(std::vector<ChainEvent>& events, std::size_t length) { events.resize(length); }

void check_base(const AttackSequence& base, const ChainOptions& opts) {
  if (base.alerts.empty()) throw ArgumentError("chain: base sequence is empty");
  if (opts.length < 1) throw ArgumentError("chain: length must be >= 1");
}

}  // namespace

AttackChain build_normal_chain(const AttackSequence& base, const VirtualRealLib& lib, std::uint64_t seed,
                               const ChainOptions& opts) {
  check_base(base, opts);
  Rng rng = make_stream(seed, 0);
  AttackChain c;
  c.events = base_events(base, lib, opts.length, rng, opts);
  pad(c.events, opts.length);
  c.label = ChainLabel::kNormal;
  c.base_id = base.id;
  return c;
}

AttackChain build_feint_chain(const AttackSequence& base, const VirtualRealLib& lib, int n_real, std::uint64_t seed,
                              const ChainOptions& opts) {
  check_base(base, opts);
  if (n_real < 1 || n_real > kMaxInsertions) {
    throw ArgumentError("feint chain: n_real must lie in 1.." + std::to_string(kMaxInsertions));
  }
  const auto k = static_cast<std::size_t>(n_real);
  if (lib.real.size() < k) {
    throw ArgumentError("feint chain: real lib has " + std::to_string(lib.real.size()) + " entries, " +
                        std::to_string(k) + " requested");
  }
  if (opts.length <= k) throw ArgumentError("feint chain: length must exceed n_real");

  Rng rng = make_stream(seed, 0);
  const auto base_part = base_events(base, lib, opts.length - k, rng, opts);

  // lib.real is ascending by confidence; u^2 leans toward its low end
  std::vector<std::size_t> picks;
  std::vector<char> taken(lib.real.size(), 0);
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t idx = lib.real.size();
    for (int attempt = 0; attempt < 64 && idx == lib.real.size(); ++attempt) {
      const double u = uniform01(rng);
      const auto cand = std::min(lib.real.size() - 1, static_cast<std::size_t>(u * u * static_cast<double>(lib.real.size())));
      if (!taken[cand]) idx = cand;
    }
    if (idx == lib.real.size()) idx = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), 0) - taken.begin());
    taken[idx] = 1;
    picks.push_back(idx);
  }

  const std::size_t m = base_part.size() + k;
  std::vector<std::size_t> slots(m);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(slots[i], slots[std::uniform_int_distribution<std::size_t>(i, m - 1)(rng)]);
  }
  std::vector<std::size_t> positions(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(positions.begin(), positions.end());

  AttackChain c;
  c.events.reserve(opts.length);
  std::size_t next_base = 0, next_real = 0;
  for (std::size_t p = 0; p < m; ++p) {
    if (next_real < k && positions[next_real] == p) {
      const auto& a = lib.real[picks[next_real++]];
      c.events.push_back({a.attack_type, stage_of(a.attack_type, opts.stage_map).stage, a.confidence, true});
    } else {
      c.events.push_back(base_part[next_base++]);
    }
  }
  pad(c.events, opts.length);
  c.label = ChainLabel::kFeint;
  c.insertions = std::move(positions);
  c.base_id = base.id;
  return c;
}

InsertionHistogram default_insertion_histogram() {
  return {{1, 3371}, {2, 3248}, {3, 1811}, {4, 672}, {5, 200}, {6, 50}, {7, 11}, {8, 1}};
}

InsertionHistogram scale_histogram(const InsertionHistogram& h, double scale) {
  if (!(scale >= 0.0)) throw ArgumentError("histogram scale must be >= 0");
  InsertionHistogram out;
  for (const auto& [n, count] : h) {
    auto s = static_cast<std::size_t>(std::floor(static_cast<double>(count) * scale));
    if (count > 0 && s == 0) s = 1;
    out[n] = s;
  }
  return out;
}

namespace {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_label(const std::vector<std::size_t>& ids,
                                                                             const std::vector<ChainLabel>& labels,
                                                                             double train_fraction,
                                                                             std::uint64_t seed) {
  std::vector<std::size_t> train, test;
  for (const auto label : {ChainLabel::kNormal, ChainLabel::kFeint}) {
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (labels[i] == label) group.push_back(ids[i]);
    }
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(label) + 1);
    std::shuffle(group.begin(), group.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(group.size())));
    train.insert(train.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.insert(test.end(), group.begin() + static_cast<std::ptrdiff_t>(n_train), group.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(const std::vector<AttackChain>& chains,
                                                                               double train_fraction,
                                                                               std::uint64_t seed) {
  std::vector<std::size_t> ids(chains.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::vector<ChainLabel> labels;
  for (const auto& c : chains) labels.push_back(c.label);
  return split_by_label(ids, labels, train_fraction, seed);
}

FeintLib build_feint_lib(const AttackSequenceSet& sequences, const VirtualRealLib& lib,
                         const InsertionHistogram& histogram, std::uint64_t seed, const ChainOptions& opts) {
  if (sequences.sequences.empty()) throw ArgumentError("feint lib: no base sequences");
  std::size_t total = 0;
  for (const auto& [n, count] : histogram) {
    if (n < 1 || n > kMaxInsertions) throw ArgumentError("feint lib: histogram bucket out of range");
    if (count > 0 && lib.real.size() < static_cast<std::size_t>(n)) {
      throw ArgumentError("feint lib: real lib too small for " + std::to_string(n) + " insertions");
    }
    total += count;
  }
  const auto& seqs = sequences.sequences;
  FeintLib out;
  out.histogram = histogram;
  out.chains.reserve(2 * total);
  std::size_t k = 0;
  for (const auto& [n, count] : histogram) {
    for (std::size_t i = 0; i < count; ++i, ++k) {
      out.chains.push_back(build_feint_chain(seqs[k % seqs.size()], lib, n, splitmix64(seed ^ (2 * k + 1)), opts));
    }
  }
  for (std::size_t i = 0; i < total; ++i) {
    out.chains.push_back(build_normal_chain(seqs[i % seqs.size()], lib, splitmix64(seed ^ (2 * i + 2)), opts));
  }
  std::tie(out.train, out.test) = stratified_split(out.chains, 0.8, seed);
  return out;
}

EventEncoder::EventEncoder(std::vector<std::string> types, std::size_t vocab_size)
    : types_(std::move(types)), vocab_size_(vocab_size) {
  if (vocab_size_ < 1) throw ArgumentError("event encoder: vocab size must be >= 1");
}

EventEncoder EventEncoder::fit(const std::vector<AttackChain>& chains, std::size_t vocab_size) {
  std::set<std::string> seen;
  for (const auto& c : chains) {
    for (const auto& e : c.events) {
      if (!e.is_padding()) seen.insert(e.attack_type);
    }
  }
  return EventEncoder(std::vector<std::string>(seen.begin(), seen.end()), vocab_size);
}

Eigen::VectorXd EventEncoder::embed(const ChainEvent& e) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(embedding_size()));
  if (e.is_padding()) return v;
  const auto it = std::lower_bound(types_.begin(), types_.end(), e.attack_type);
  std::size_t slot = vocab_size_ - 1;
  if (it != types_.end() && *it == e.attack_type) {
    slot = std::min(static_cast<std::size_t>(it - types_.begin()), vocab_size_ - 1);
  }
  v[static_cast<Eigen::Index>(slot)] = 1.0;
  v[static_cast<Eigen::Index>(vocab_size_)] = static_cast<double>(e.stage) / kStageCount;
  v[static_cast<Eigen::Index>(vocab_size_ + 1)] = e.confidence;
  return v;
}

std::vector<Eigen::VectorXd> EventEncoder::embed(const AttackChain& c) const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(c.events.size());
  for (const auto& e : c.events) out.push_back(embed(e));
  return out;
}

DetectorConfig detector_config_from_json(const nlohmann::json& j) {
  DetectorConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.svm_c = j.value("svm_c", c.svm_c);
  c.svm_g = j.value("svm_g", c.svm_g);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json to_json(const DetectorConfig& c) {
  return {{"hidden", c.hidden},   {"svm_c", c.svm_c},
          {"svm_g", c.svm_g},     {"epochs", c.epochs},
          {"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"batch_size", c.batch_size},       {"holdout_fraction", c.holdout_fraction},
          {"vocab_size", c.vocab_size},       {"clip_norm", c.clip_norm},
          {"seed", c.seed}};
}

ChainDetector::ChainDetector(EventEncoder enc, nn::BiRnnEncoder<double> rnn, Eigen::VectorXd head_w, double head_b,
                             svm::BinaryModel<double> svm, std::size_t length, double validation_accuracy)
    : enc_(std::move(enc)),
      rnn_(std::move(rnn)),
      head_w_(std::move(head_w)),
      head_b_(head_b),
      svm_(std::move(svm)),
      length_(length),
      validation_accuracy_(validation_accuracy) {}

Eigen::VectorXd ChainDetector::encode(const AttackChain& chain) const {
  if (chain.events.size() != length_) {
    throw ArgumentError("detector expects chains of length " + std::to_string(length_) + ", got " +
                        std::to_string(chain.events.size()));
  }
  return rnn_.encode(enc_.embed(chain));
}

Detection ChainDetector::detect(const AttackChain& chain) const {
  const double d = svm_.decision(encode(chain));
  return {d >= 0 ? ChainLabel::kFeint : ChainLabel::kNormal, d};
}

double ChainDetector::head_probability(const AttackChain& chain) const {
  return 1.0 / (1.0 + std::exp(-(head_w_.dot(encode(chain)) + head_b_)));
}

void ChainDetector::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nn::ParamFile f;
  f.header = {kDetectorParamKind, static_cast<std::int64_t>(length_), static_cast<std::int64_t>(enc_.vocab_size()),
              rnn_.inputs(), rnn_.hidden()};
  f.shapes = {{rnn_.forward_cell().params().size()}, {rnn_.backward_cell().params().size()}, {head_w_.size()}, {1}};
  f.values = {rnn_.forward_cell().params(), rnn_.backward_cell().params(), head_w_, Eigen::VectorXd::Constant(1, head_b_)};
  nn::save_param_file(dir / "detector.bin", f);

  std::ofstream svm_out(dir / "detector.svm", std::ios::binary);
  if (!svm_out) throw IoError("cannot write " + (dir / "detector.svm").string());
  svm::MulticlassModel<double> wrap{{"FEINT", "NORMAL"}, {svm_}};
  svm::write_model(svm_out, wrap);

  std::ofstream meta(dir / "detector.json", std::ios::binary);
  if (!meta) throw IoError("cannot write " + (dir / "detector.json").string());
  meta << nlohmann::json{{"types", enc_.types()},
                         {"vocab_size", enc_.vocab_size()},
                         {"length", length_},
                         {"validation_accuracy", validation_accuracy_}}
              .dump(1)
       << '\n';
}

ChainDetector ChainDetector::load(const std::filesystem::path& dir) {
  const auto f = nn::load_param_file(dir / "detector.bin");
  if (f.header.size() != 5 || f.header[0] != kDetectorParamKind || f.values.size() != 4) {
    throw FormatError("detector.bin is not a chain detector");
  }
  const auto input = f.header[3], hidden = f.header[4];
  nn::RnnCell<double> fwd(input, hidden), bwd(input, hidden);
  if (f.values[0].size() != fwd.params().size() || f.values[1].size() != bwd.params().size() ||
      f.values[2].size() != 2 * hidden || f.values[3].size() != 1) {
    throw FormatError("detector.bin tensor sizes do not match its header");
  }
  fwd.params() = f.values[0];
  bwd.params() = f.values[1];

  std::ifstream svm_in(dir / "detector.svm", std::ios::binary);
  if (!svm_in) throw IoError("cannot read " + (dir / "detector.svm").string());
  auto wrap = svm::read_model<double>(svm_in);
  if (wrap.classes != std::vector<std::string>{"FEINT", "NORMAL"}) throw FormatError("detector.svm has wrong classes");

  std::ifstream meta_in(dir / "detector.json");
  if (!meta_in) throw IoError("cannot read " + (dir / "detector.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("detector.json: ") + e.what());
  }
  EventEncoder enc(meta.at("types").get<std::vector<std::string>>(), meta.at("vocab_size").get<std::size_t>());
  if (static_cast<std::int64_t>(enc.embedding_size()) != input) throw FormatError("detector vocab does not match encoder");
  return ChainDetector(std::move(enc), nn::BiRnnEncoder<double>(std::move(fwd), std::move(bwd)), f.values[2],
                       f.values[3][0], std::move(wrap.models.front()), meta.at("length").get<std::size_t>(),
                       meta.at("validation_accuracy").get<double>());
}

ChainDetector train_detector(const FeintLib& lib, const DetectorConfig& cfg, DetectorTrainLog* log) {
  std::vector<ChainLabel> train_labels;
  for (const auto i : lib.train) train_labels.push_back(lib.chains.at(i).label);
  const bool has_feint = std::count(train_labels.begin(), train_labels.end(), ChainLabel::kFeint) > 0;
  const bool has_normal = std::count(train_labels.begin(), train_labels.end(), ChainLabel::kNormal) > 0;
  if (!has_feint || !has_normal) throw ArgumentError("train_detector: train split needs both labels");
  if (cfg.batch_size == 0 || cfg.epochs < 0 || cfg.hidden < 1) throw ArgumentError("train_detector: bad config");

  auto [fit, holdout] = split_by_label(lib.train, train_labels, 1.0 - cfg.holdout_fraction, splitmix64(cfg.seed ^ 0x686f6c64));
  if (fit.empty()) throw ArgumentError("train_detector: holdout leaves no training chains");
  const std::size_t length = lib.chains.at(fit.front()).events.size();

  std::vector<AttackChain> fit_chains;
  for (const auto i : fit) fit_chains.push_back(lib.chains[i]);
  EventEncoder enc = EventEncoder::fit(fit_chains, cfg.vocab_size);

  std::vector<std::vector<Eigen::VectorXd>> xs;
  std::vector<double> ys;
  for (const auto& c : fit_chains) {
    if (c.events.size() != length) throw ArgumentError("train_detector: chains differ in length");
    xs.push_back(enc.embed(c));
    ys.push_back(c.label == ChainLabel::kFeint ? 1.0 : 0.0);
  }

  const auto input = static_cast<nn::Index>(enc.embedding_size());
  nn::BiRnnEncoder<double> rnn(input, cfg.hidden, cfg.seed);
  Eigen::VectorXd w(2 * cfg.hidden);
  {
    Rng rng = make_stream(cfg.seed, 0x68656164);
    nn::detail::init_uniform<double>(w, 2 * cfg.hidden, rng);
  }
  double b = 0.0;

  auto params = rnn.parameters();
  std::vector<Eigen::VectorXd> vel{Eigen::VectorXd::Zero(params[0]->size()), Eigen::VectorXd::Zero(params[1]->size())};
  Eigen::VectorXd vel_w = Eigen::VectorXd::Zero(w.size());
  double vel_b = 0.0;

  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = make_stream(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Eigen::VectorXd gf = Eigen::VectorXd::Zero(params[0]->size());
      Eigen::VectorXd gb = Eigen::VectorXd::Zero(params[1]->size());
      Eigen::VectorXd gw = Eigen::VectorXd::Zero(w.size());
      double gbias = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        nn::BiRnnEncoder<double>::Trace trace;
        const Eigen::VectorXd e = rnn.encode(xs[i], trace);
        const double z = w.dot(e) + b;
        const double p = 1.0 / (1.0 + std::exp(-z));
        epoch_loss -= ys[i] > 0.5 ? std::log(std::max(p, 1e-300)) : std::log(std::max(1.0 - p, 1e-300));
        const double dz = p - ys[i];
        gw += dz * e;
        gbias += dz;
        rnn.backward(xs[i], trace, dz * w, gf, gb);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      const double norm =
          inv * std::sqrt(gf.squaredNorm() + gb.squaredNorm() + gw.squaredNorm() + gbias * gbias);
      const double clip = cfg.clip_norm > 0.0 && norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      const double scale = cfg.learning_rate * inv * clip;
      vel[0] = cfg.momentum * vel[0] - scale * gf;
      vel[1] = cfg.momentum * vel[1] - scale * gb;
      vel_w = cfg.momentum * vel_w - scale * gw;
      vel_b = cfg.momentum * vel_b - scale * gbias;
      *params[0] += vel[0];
      *params[1] += vel[1];
      w += vel_w;
      b += vel_b;
    }
    epoch_loss /= static_cast<double>(xs.size());
    if (!std::isfinite(epoch_loss)) throw TrainingError(static_cast<std::size_t>(epoch), "non-finite detector loss");
    if (log) log->epoch_loss.push_back(epoch_loss);
  }

  svm::Mat<double> enc_mat(static_cast<Eigen::Index>(xs.size()), 2 * cfg.hidden);
  std::vector<int> y_svm(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    enc_mat.row(static_cast<Eigen::Index>(i)) = rnn.encode(xs[i]).transpose();
    y_svm[i] = ys[i] > 0.5 ? 1 : -1;
  }
  auto model = svm::train_binary<double>(enc_mat, y_svm, cfg.svm_c, cfg.svm_g);

  ChainDetector det(std::move(enc), std::move(rnn), w, b, std::move(model), length, 0.0);
  const auto& eval_ids = holdout.empty() ? fit : holdout;
  std::size_t correct = 0;
  for (const auto i : eval_ids) correct += det.detect(lib.chains[i]).label == lib.chains[i].label;
  const double acc = static_cast<double>(correct) / static_cast<double>(eval_ids.size());
  return ChainDetector(det.encoder(), det.rnn(), std::move(w), b, det.svm(), length, acc);
}

ChainLabel weighted_vote(const std::vector<ChainLabel>& votes, const std::vector<double>& weights) {
  if (votes.empty() || votes.size() % 2 == 0) throw ArgumentError("vote needs an odd number of voters");
  if (weights.size() != votes.size()) throw ArgumentError("vote: one weight per voter");
  double feint = 0.0, normal = 0.0;
  for (std::size_t i = 0; i < votes.size(); ++i) (votes[i] == ChainLabel::kFeint ? feint : normal) += weights[i];
  return feint > normal ? ChainLabel::kFeint : ChainLabel::kNormal;
}

ChainLabel ensemble_detect(const std::vector<const ChainDetector*>& detectors, const AttackChain& chain,
                           std::vector<double> weights) {
  if (detectors.empty() || detectors.size() % 2 == 0) {
    throw ArgumentError("ensemble_detect: need an odd number of detectors, got " + std::to_string(detectors.size()));
  }
  if (weights.empty()) {
    for (const auto* d : detectors) weights.push_back(d->validation_accuracy());
  }
  std::vector<ChainLabel> votes;
  for (const auto* d : detectors) votes.push_back(d->detect(chain).label);
  return weighted_vote(votes, weights);
}

void write_feint_lib_csv(std::ostream& out, const FeintLib& lib) {
  std::vector<char> in_train(lib.chains.size(), 0);
  for (const auto i : lib.train) in_train[i] = 1;
  out << "chain,label,split,position,attack_type,stage,confidence,is_real,base_id\n";
  char buf[32];
  for (std::size_t c = 0; c < lib.chains.size(); ++c) {
    const auto& ch = lib.chains[c];
    for (std::size_t p = 0; p < ch.events.size(); ++p) {
      const auto& e = ch.events[p];
      std::snprintf(buf, sizeof buf, "%.17g", e.confidence);
      out << c << ',' << static_cast<int>(ch.label) << ',' << (in_train[c] ? "train" : "test") << ',' << p << ','
          << csv::escape(e.attack_type) << ',' << e.stage << ',' << buf << ',' << (e.is_real ? 1 : 0) << ','
          << ch.base_id << '\n';
    }
  }
}

FeintLib read_feint_lib_csv(std::istream& in) {
  FeintLib lib;
  std::string line;
  if (!std::getline(in, line) || line.rfind("chain,label,split", 0) != 0) throw FormatError("feint lib: bad header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 9) throw FormatError("feint lib line " + std::to_string(line_no) + ": expected 9 fields");
    try {
      const auto c = std::stoul(f[0]);
      if (c == lib.chains.size()) {
        lib.chains.emplace_back();
        lib.chains.back().label = std::stoi(f[1]) ? ChainLabel::kFeint : ChainLabel::kNormal;
        lib.chains.back().base_id = std::stoul(f[8]);
        (f[2] == "train" ? lib.train : lib.test).push_back(c);
      } else if (c + 1 != lib.chains.size()) {
        throw FormatError("feint lib line " + std::to_string(line_no) + ": chains out of order");
      }
      auto& ch = lib.chains.back();
      ChainEvent e{f[4], std::stoi(f[5]), std::stod(f[6]), f[7] == "1"};
      if (e.is_real) ch.insertions.push_back(ch.events.size());
      ch.events.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw FormatError("feint lib line " + std::to_string(line_no) + ": bad number");
    }
  }
  for (const auto& ch : lib.chains) {
    if (ch.label == ChainLabel::kFeint) ++lib.histogram[static_cast<int>(ch.insertions.size())];
  }
  return lib;
}

}  // namespace feint
