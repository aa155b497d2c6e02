#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "feint/errors.hpp"
#include "feint/flow.hpp"
#include "feint/nn/sequential.hpp"
#include "feint/nn/serialize.hpp"
#include "feint/rng.hpp"

namespace feint::nn {

// conv(f1) conv(f1) maxpool conv(f2) conv(f2) flatten dense, ReLU after each conv and
// the dense layer, plus a softmax head used only while training the extractor.
struct CnnConfig {
  Index input_side = 10;
  Index filters1 = 32;
  Index filters2 = 64;
  Index dense = 512;
  Index classes = 5;
};

inline constexpr std::int64_t kCnnParamKind = 1;

// Features 0..82 row-major into a side x side x 1 grid, the rest zero.
template <typename Scalar = double>
Tensor<Scalar> reshape_flow(const Eigen::Ref<const Eigen::VectorXd>& normalized, Index side = 10) {
  if (normalized.size() > side * side) {
    throw ShapeError(std::to_string(normalized.size()) + " features do not fit a " + std::to_string(side) + "x" +
                     std::to_string(side) + " grid");
  }
  Tensor<Scalar> t({side, side, 1});
  t.values().head(normalized.size()) = normalized.template cast<Scalar>();
  return t;
}

template <typename Scalar = double>
Tensor<Scalar> reshape_flow(const FlowRecord& normalized_record, Index side = 10) {
  return reshape_flow<Scalar>(normalized_record.features, side);
}

template <typename Scalar>
Vec<Scalar> softmax(const Vec<Scalar>& logits) {
  Vec<Scalar> e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Scalar = double>
class CnnFeatureExtractor {
 public:
  explicit CnnFeatureExtractor(CnnConfig cfg = {}, std::uint64_t seed = 0)
      : cfg_(cfg), body_({cfg.input_side, cfg.input_side, 1}), head_({cfg.dense}) {
    if (cfg.input_side < 2 || cfg.filters1 < 1 || cfg.filters2 < 1 || cfg.dense < 1 || cfg.classes < 2) {
      throw ArgumentError("cnn config: sizes must be positive, input side >= 2 and classes >= 2");
    }
    const Index half = cfg.input_side / 2;
    body_.add(Conv2d<Scalar>(1, cfg.filters1)).add(Relu<Scalar>());
    body_.add(Conv2d<Scalar>(cfg.filters1, cfg.filters1)).add(Relu<Scalar>());
    body_.add(MaxPool2d<Scalar>());
    body_.add(Conv2d<Scalar>(cfg.filters1, cfg.filters2)).add(Relu<Scalar>());
    body_.add(Conv2d<Scalar>(cfg.filters2, cfg.filters2)).add(Relu<Scalar>());
    body_.add(Flatten<Scalar>());
    body_.add(Dense<Scalar>(half * half * cfg.filters2, cfg.dense)).add(Relu<Scalar>());
    head_.add(Dense<Scalar>(cfg.dense, cfg.classes));

    const auto chain = table_shapes();
    const std::vector<Shape> expect{{cfg.input_side, cfg.input_side, 1}, {cfg.input_side, cfg.input_side, cfg.filters1},
                                    {half, half, cfg.filters1},         {half, half, cfg.filters2},
                                    {half * half * cfg.filters2},       {cfg.dense},
                                    {cfg.classes}};
    if (chain != expect) throw ShapeError("cnn shape chain does not match its configuration");

    Rng rng = make_stream(seed, 0x636e6e);
    body_.init(rng);
    head_.init(rng);
  }

  const CnnConfig& config() const { return cfg_; }
  Sequential<Scalar>& body() { return body_; }
  const Sequential<Scalar>& body() const { return body_; }
  Sequential<Scalar>& head() { return head_; }
  const Sequential<Scalar>& head() const { return head_; }

  // input, first conv, pool, last conv, flatten, dense, head
  std::vector<Shape> table_shapes() const {
    const auto b = body_.shape_chain();
    return {b[0], b[1], b[5], b[8], b[10], b[12], head_.output_shape()};
  }

  Vec<Scalar> features(const Tensor<Scalar>& x) const { return body_.forward(x).values(); }

  Vec<Scalar> logits(const Tensor<Scalar>& x) const {
    return head_.forward(Tensor<Scalar>({cfg_.dense}, features(x))).values();
  }

  Vec<Scalar> probabilities(const Tensor<Scalar>& x) const { return softmax<Scalar>(logits(x)); }

  ParamFile to_param_file() const {
    ParamFile f;
    f.header = {kCnnParamKind, cfg_.input_side, cfg_.filters1, cfg_.filters2, cfg_.dense, cfg_.classes};
    for (const auto* model : {&body_, &head_}) {
      for (const auto* p : model->parameters()) {
        f.shapes.push_back({p->size()});
        f.values.push_back(p->template cast<double>());
      }
    }
    return f;
  }

  static CnnFeatureExtractor from_param_file(const ParamFile& f) {
    if (f.header.size() != 6 || f.header[0] != kCnnParamKind) throw FormatError("parameter file is not a cnn model");
    CnnFeatureExtractor m(CnnConfig{f.header[1], f.header[2], f.header[3], f.header[4], f.header[5]});
    std::size_t k = 0;
    for (auto* model : {&m.body_, &m.head_}) {
      for (auto* p : model->parameters()) {
        if (k >= f.values.size() || f.values[k].size() != p->size()) {
          throw FormatError("cnn parameter tensor " + std::to_string(k) + " has the wrong size");
        }
        *p = f.values[k++].template cast<Scalar>();
      }
    }
    if (k != f.values.size()) throw FormatError("cnn parameter file has extra tensors");
    return m;
  }

 private:
  CnnConfig cfg_;
  Sequential<Scalar> body_;
  Sequential<Scalar> head_;
};

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct EpochLoss {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = std::numeric_limits<double>::quiet_NaN();  // NaN without a validation split
  double train_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochLoss> curve;
};

inline void write_loss_curve_csv(std::ostream& out, const TrainReport& r) {
  out << "epoch,train_loss,validation_loss,train_accuracy\n";
  char buf[128];
  for (const auto& e : r.curve) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.validation_loss,
                  e.train_accuracy);
    out << buf;
  }
}

// Minibatch SGD with momentum on softmax cross-entropy. Each epoch ends with a
// fixed-order evaluation pass, so the curve only moves when parameters do.
template <typename Scalar>
TrainReport train_softmax_head(CnnFeatureExtractor<Scalar>& model, const std::vector<Tensor<Scalar>>& inputs,
                               const std::vector<int>& labels, const TrainConfig& cfg) {
  if (inputs.empty()) throw EmptyDatasetError("train_softmax_head: no training samples");
  if (inputs.size() != labels.size()) throw ArgumentError("train_softmax_head: inputs and labels differ in length");
  const Index classes = model.config().classes;
  for (int y : labels) {
    if (y < 0 || y >= classes) throw ArgumentError("train_softmax_head: label outside the head's classes");
  }
  if (std::adjacent_find(labels.begin(), labels.end(), std::not_equal_to<>()) == labels.end()) {
    throw ArgumentError("train_softmax_head: labels must span at least two classes");
  }
  if (cfg.batch_size == 0 || cfg.epochs < 0 || !(cfg.learning_rate >= 0.0)) {
    throw ArgumentError("train_softmax_head: bad training config");
  }

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_stream(cfg.seed, 1);
  std::shuffle(order.begin(), order.end(), split_rng);
  auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(inputs.size())));
  if (n_val >= inputs.size()) n_val = 0;
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());

  auto& body = model.body();
  auto& head = model.head();
  auto body_params = body.parameters();
  auto head_params = head.parameters();
  auto body_vel = body.zero_grads();
  auto head_vel = head.zero_grads();

  auto evaluate = [&](const std::vector<std::size_t>& idx, double* accuracy) {
    double loss = 0.0;
    std::size_t correct = 0;
    for (const auto i : idx) {
      const Vec<Scalar> p = model.probabilities(inputs[i]);
      loss -= std::log(std::max<double>(static_cast<double>(p[labels[i]]), 1e-300));
      Index arg = 0;
      p.maxCoeff(&arg);
      correct += arg == labels[i];
    }
    if (accuracy) *accuracy = idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
    return idx.empty() ? std::numeric_limits<double>::quiet_NaN() : loss / static_cast<double>(idx.size());
  };

  TrainReport report;
  std::vector<std::size_t> sorted_train = train;
  std::sort(sorted_train.begin(), sorted_train.end());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = make_stream(cfg.seed, 100 + static_cast<std::uint64_t>(epoch));
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train.size(), start + cfg.batch_size);
      auto body_g = body.zero_grads();
      auto head_g = head.zero_grads();
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = train[b];
        const auto body_acts = body.forward_all(inputs[i]);
        const auto head_acts = head.forward_all(body_acts.back());
        const Vec<Scalar> p = softmax<Scalar>(head_acts.back().values());
        batch_loss -= std::log(std::max<double>(static_cast<double>(p[labels[i]]), 1e-300));
        Vec<Scalar> dlogits = p;
        dlogits[labels[i]] -= Scalar(1);
        const auto dfeat = head.backward(head_acts, Tensor<Scalar>({classes}, dlogits), head_g);
        body.backward(body_acts, dfeat, body_g);
      }
      if (!std::isfinite(batch_loss)) throw TrainingError(epoch, "non-finite loss during extractor training");
      const Scalar scale = Scalar(cfg.learning_rate) / Scalar(stop - start);
      const Scalar mom = Scalar(cfg.momentum);
      for (std::size_t k = 0; k < body_params.size(); ++k) {
        body_vel[k] = mom * body_vel[k] - scale * body_g[k];
        *body_params[k] += body_vel[k];
      }
      for (std::size_t k = 0; k < head_params.size(); ++k) {
        head_vel[k] = mom * head_vel[k] - scale * head_g[k];
        *head_params[k] += head_vel[k];
      }
    }
    EpochLoss e;
    e.epoch = epoch;
    e.train_loss = evaluate(sorted_train, &e.train_accuracy);
    e.validation_loss = evaluate(val, nullptr);
    if (!std::isfinite(e.train_loss)) throw TrainingError(epoch, "non-finite training loss");
    report.curve.push_back(e);
  }
  return report;
}

}  // namespace feint::nn
