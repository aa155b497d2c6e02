#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "feint/errors.hpp"
#include "feint/nn/layers.hpp"
#include "feint/nn/serialize.hpp"

namespace feint::nn {

inline constexpr Index kDefaultHidden = 32;
inline constexpr std::int64_t kBiRnnParamKind = 2;

// h' = tanh(Wx x + Wh h + b). Parameters: Wx (H x D, row-major), Wh (H x H), b.
template <typename Scalar>
class RnnCell {
 public:
  RnnCell() = default;
  RnnCell(Index input, Index hidden)
      : in_(input), hidden_(hidden), params_(Vec<Scalar>::Zero(hidden * input + hidden * hidden + hidden)) {
    if (input < 1 || hidden < 1) throw ArgumentError("rnn cell sizes must be positive");
  }

  Index inputs() const { return in_; }
  Index hidden() const { return hidden_; }
  Vec<Scalar>& params() { return params_; }
  const Vec<Scalar>& params() const { return params_; }

  void init(Rng& rng) {
    detail::init_uniform<Scalar>(params_.head(hidden_ * in_), in_, rng);
    detail::init_uniform<Scalar>(params_.segment(hidden_ * in_, hidden_ * hidden_), hidden_, rng);
    params_.tail(hidden_).setZero();
  }

  Vec<Scalar> step(const Vec<Scalar>& x, const Vec<Scalar>& h) const {
    check(x, h);
    return (wx() * x + wh() * h + params_.tail(hidden_)).array().tanh().matrix();
  }

  // Given the step's input x, previous state h, output state out and dL/dout: adds
  // parameter gradients into dparams and returns (dL/dx, dL/dh).
  std::pair<Vec<Scalar>, Vec<Scalar>> backward(const Vec<Scalar>& x, const Vec<Scalar>& h, const Vec<Scalar>& out,
                                               const Vec<Scalar>& dout, Eigen::Ref<Vec<Scalar>> dparams) const {
    check(x, h);
    const Vec<Scalar> da = dout.cwiseProduct((Scalar(1) - out.array().square()).matrix());
    Eigen::Map<RowMat<Scalar>> dwx(dparams.data(), hidden_, in_);
    Eigen::Map<RowMat<Scalar>> dwh(dparams.data() + hidden_ * in_, hidden_, hidden_);
    dwx.noalias() += da * x.transpose();
    dwh.noalias() += da * h.transpose();
    dparams.tail(hidden_) += da;
    return {wx().transpose() * da, wh().transpose() * da};
  }

 private:
  Eigen::Map<const RowMat<Scalar>> wx() const { return {params_.data(), hidden_, in_}; }
  Eigen::Map<const RowMat<Scalar>> wh() const { return {params_.data() + hidden_ * in_, hidden_, hidden_}; }

  void check(const Vec<Scalar>& x, const Vec<Scalar>& h) const {
    if (x.size() != in_ || h.size() != hidden_) {
      throw ShapeError("rnn cell expects input " + std::to_string(in_) + " and state " + std::to_string(hidden_) +
                       ", got " + std::to_string(x.size()) + " and " + std::to_string(h.size()));
    }
  }

  Index in_ = 0;
  Index hidden_ = 0;
  Vec<Scalar> params_;
};

// Forward cell over steps 1..T, backward cell over T..1; encoding is
// [forward state after step T, backward state after step 1].
template <typename Scalar>
class BiRnnEncoder {
 public:
  struct Trace {
    std::vector<Vec<Scalar>> fwd;  // fwd[t] = state after t steps, fwd[0] = 0
    std::vector<Vec<Scalar>> bwd;  // bwd[k] = state after k reversed steps
  };

  BiRnnEncoder() = default;
  BiRnnEncoder(Index input, Index hidden = kDefaultHidden, std::uint64_t seed = 0)
      : fwd_(input, hidden), bwd_(input, hidden) {
    Rng rng = make_stream(seed, 0x726e6e);
    fwd_.init(rng);
    bwd_.init(rng);
  }
  BiRnnEncoder(RnnCell<Scalar> fwd, RnnCell<Scalar> bwd) : fwd_(std::move(fwd)), bwd_(std::move(bwd)) {
    if (fwd_.inputs() != bwd_.inputs() || fwd_.hidden() != bwd_.hidden()) {
      throw ShapeError("bi-rnn cells differ in size");
    }
  }

  Index inputs() const { return fwd_.inputs(); }
  Index hidden() const { return fwd_.hidden(); }
  Index encoding_size() const { return 2 * fwd_.hidden(); }
  RnnCell<Scalar>& forward_cell() { return fwd_; }
  const RnnCell<Scalar>& forward_cell() const { return fwd_; }
  RnnCell<Scalar>& backward_cell() { return bwd_; }
  const RnnCell<Scalar>& backward_cell() const { return bwd_; }

  // Same encoder with the two cells exchanged.
  BiRnnEncoder swapped() const { return BiRnnEncoder(bwd_, fwd_); }

  std::vector<Vec<Scalar>*> parameters() { return {&fwd_.params(), &bwd_.params()}; }
  std::vector<const Vec<Scalar>*> parameters() const { return {&fwd_.params(), &bwd_.params()}; }

  Vec<Scalar> encode(const std::vector<Vec<Scalar>>& steps) const {
    Trace t;
    return encode(steps, t);
  }

  Vec<Scalar> encode(const std::vector<Vec<Scalar>>& steps, Trace& trace) const {
    if (steps.empty()) throw ArgumentError("bi-rnn: empty sequence");
    const Index h = hidden();
    const std::size_t n = steps.size();
    trace.fwd.assign(1, Vec<Scalar>::Zero(h));
    trace.bwd.assign(1, Vec<Scalar>::Zero(h));
    for (std::size_t t = 0; t < n; ++t) {
      trace.fwd.push_back(fwd_.step(steps[t], trace.fwd.back()));
      trace.bwd.push_back(bwd_.step(steps[n - 1 - t], trace.bwd.back()));
    }
    Vec<Scalar> enc(2 * h);
    enc << trace.fwd.back(), trace.bwd.back();
    return enc;
  }

  // Backpropagation through time from dL/d(encoding). Adds into dfwd/dbwd (cell parameter
  // gradients) and, if given, into dsteps.
  void backward(const std::vector<Vec<Scalar>>& steps, const Trace& trace, const Vec<Scalar>& denc,
                Eigen::Ref<Vec<Scalar>> dfwd, Eigen::Ref<Vec<Scalar>> dbwd,
                std::vector<Vec<Scalar>>* dsteps = nullptr) const {
    const Index h = hidden();
    const std::size_t n = steps.size();
    if (denc.size() != 2 * h || trace.fwd.size() != n + 1 || trace.bwd.size() != n + 1) {
      throw ShapeError("bi-rnn backward: trace or gradient does not match the sequence");
    }
    if (dsteps) {
      dsteps->assign(n, Vec<Scalar>::Zero(inputs()));
    }
    Vec<Scalar> dh = denc.head(h);
    for (std::size_t t = n; t-- > 0;) {
      auto [dx, dprev] = fwd_.backward(steps[t], trace.fwd[t], trace.fwd[t + 1], dh, dfwd);
      if (dsteps) (*dsteps)[t] += dx;
      dh = std::move(dprev);
    }
    dh = denc.tail(h);
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t t = n - 1 - k;
      auto [dx, dprev] = bwd_.backward(steps[t], trace.bwd[k], trace.bwd[k + 1], dh, dbwd);
      if (dsteps) (*dsteps)[t] += dx;
      dh = std::move(dprev);
    }
  }

  ParamFile to_param_file() const {
    ParamFile f;
    f.header = {kBiRnnParamKind, inputs(), hidden()};
    for (const auto* p : parameters()) {
      f.shapes.push_back({p->size()});
      f.values.push_back(p->template cast<double>());
    }
    return f;
  }

 private:
  RnnCell<Scalar> fwd_;
  RnnCell<Scalar> bwd_;
};

}  // namespace feint::nn
