#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "feint/nn/tensor.hpp"
#include "feint/rng.hpp"

namespace feint::nn {

namespace detail {

inline void mix(std::uint64_t& h, std::uint64_t v) { h = splitmix64(h ^ v); }

// U(-gain / sqrt(fan_in), gain / sqrt(fan_in)); gain sqrt(6) is the He bound for ReLU stacks.
template <typename Scalar>
void init_uniform(Eigen::Ref<Vec<Scalar>> w, Index fan_in, Rng& rng, double gain = 1.0) {
  const double s = gain / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-s, s);
  for (Index i = 0; i < w.size(); ++i) w[i] = static_cast<Scalar>(u(rng));
}

inline void require_rank3(const Shape& in, const char* layer) {
  if (in.size() != 3) throw ShapeError(std::string(layer) + " expects HxWxC input, got " + shape_string(in));
}

}  // namespace detail

// Layers are stateless apart from their parameters: backward takes the forward input
// again and recomputes what it needs. Parameter gradients are added to `dparams`.

// 3x3 convolution, padding 1, stride 1, via im2col.
// Weight (ky, kx, c, f) lives at ((ky * 3 + kx) * C + c) * F + f, biases follow.
template <typename Scalar>
class Conv2d {
 public:
  Conv2d(Index in_channels, Index filters)
      : in_(in_channels), filters_(filters), params_(Vec<Scalar>::Zero(9 * in_channels * filters + filters)) {}

  Index in_channels() const { return in_; }
  Index filters() const { return filters_; }
  std::string name() const { return "conv3x3(" + std::to_string(filters_) + ")"; }

  Vec<Scalar>& params() { return params_; }
  const Vec<Scalar>& params() const { return params_; }

  void init(Rng& rng) {
    detail::init_uniform<Scalar>(params_.head(9 * in_ * filters_), 9 * in_, rng, std::sqrt(6.0));
    params_.tail(filters_).setZero();
  }

  Shape output_shape(const Shape& in) const {
    detail::require_rank3(in, "conv");
    if (in[2] != in_) {
      throw ShapeError("conv expects " + std::to_string(in_) + " channels, got input " + shape_string(in));
    }
    return {in[0], in[1], filters_};
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    const Shape out_shape = output_shape(x.shape());
    const RowMat<Scalar> cols = im2col(x);
    Tensor<Scalar> y(out_shape);
    Eigen::Map<RowMat<Scalar>> ym(y.values().data(), cols.rows(), filters_);
    ym.noalias() = cols * weights();
    ym.rowwise() += params_.tail(filters_).transpose();
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, Eigen::Ref<Vec<Scalar>> dparams) const {
    const Shape out_shape = output_shape(x.shape());
    if (dy.shape() != out_shape) {
      throw ShapeError("conv backward: gradient " + shape_string(dy.shape()) + " vs output " + shape_string(out_shape));
    }
    const Index hw = x.dim(0) * x.dim(1);
    const RowMat<Scalar> cols = im2col(x);
    Eigen::Map<const RowMat<Scalar>> dym(dy.values().data(), hw, filters_);
    Eigen::Map<RowMat<Scalar>> dw(dparams.data(), 9 * in_, filters_);
    dw.noalias() += cols.transpose() * dym;
    dparams.tail(filters_) += dym.colwise().sum().transpose();
    const RowMat<Scalar> dcols = dym * weights().transpose();
    return col2im(dcols, x.shape());
  }

  void hash_pattern(const Tensor<Scalar>&, std::uint64_t&) const {}

 private:
  Eigen::Map<const RowMat<Scalar>> weights() const { return {params_.data(), 9 * in_, filters_}; }

  RowMat<Scalar> im2col(const Tensor<Scalar>& x) const {
    const Index h = x.dim(0), w = x.dim(1), c = x.dim(2);
    RowMat<Scalar> cols = RowMat<Scalar>::Zero(h * w, 9 * c);
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < w; ++j) {
        for (Index ky = 0; ky < 3; ++ky) {
          const Index ii = i + ky - 1;
          if (ii < 0 || ii >= h) continue;
          for (Index kx = 0; kx < 3; ++kx) {
            const Index jj = j + kx - 1;
            if (jj < 0 || jj >= w) continue;
            cols.row(i * w + j).segment((ky * 3 + kx) * c, c) = x.values().segment((ii * w + jj) * c, c).transpose();
          }
        }
      }
    }
    return cols;
  }

  static Tensor<Scalar> col2im(const RowMat<Scalar>& dcols, const Shape& shape) {
    const Index h = shape[0], w = shape[1], c = shape[2];
    Tensor<Scalar> dx(shape);
    for (Index i = 0; i < h; ++i) {
      for (Index j = 0; j < w; ++j) {
        for (Index ky = 0; ky < 3; ++ky) {
          const Index ii = i + ky - 1;
          if (ii < 0 || ii >= h) continue;
          for (Index kx = 0; kx < 3; ++kx) {
            const Index jj = j + kx - 1;
            if (jj < 0 || jj >= w) continue;
            dx.values().segment((ii * w + jj) * c, c) += dcols.row(i * w + j).segment((ky * 3 + kx) * c, c).transpose();
          }
        }
      }
    }
    return dx;
  }

  Index in_;
  Index filters_;
  Vec<Scalar> params_;
};

// 2x2 max pooling, stride 2. Odd trailing rows/columns are dropped.
template <typename Scalar>
class MaxPool2d {
 public:
  std::string name() const { return "maxpool2x2"; }
  Vec<Scalar>& params() { return empty_; }
  const Vec<Scalar>& params() const { return empty_; }
  void init(Rng&) {}

  Shape output_shape(const Shape& in) const {
    detail::require_rank3(in, "maxpool");
    if (in[0] < 2 || in[1] < 2) throw ShapeError("maxpool needs at least 2x2 spatial input, got " + shape_string(in));
    return {in[0] / 2, in[1] / 2, in[2]};
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    Tensor<Scalar> y(output_shape(x.shape()));
    for_each_window(x, [&](Index oi, Index oj, Index c, Index bi, Index bj) { y.at(oi, oj, c) = x.at(bi, bj, c); });
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, Eigen::Ref<Vec<Scalar>>) const {
    const Shape out_shape = output_shape(x.shape());
    if (dy.shape() != out_shape) {
      throw ShapeError("maxpool backward: gradient " + shape_string(dy.shape()) + " vs output " +
                       shape_string(out_shape));
    }
    Tensor<Scalar> dx(x.shape());
    for_each_window(x, [&](Index oi, Index oj, Index c, Index bi, Index bj) { dx.at(bi, bj, c) += dy.at(oi, oj, c); });
    return dx;
  }

  void hash_pattern(const Tensor<Scalar>& x, std::uint64_t& h) const {
    for_each_window(x, [&](Index, Index, Index, Index bi, Index bj) {
      detail::mix(h, static_cast<std::uint64_t>(bi * 131 + bj));
    });
  }

 private:
  // Calls f(out_i, out_j, channel, argmax_i, argmax_j); the first maximum in scan order wins.
  template <typename F>
  void for_each_window(const Tensor<Scalar>& x, F&& f) const {
    const Shape o = output_shape(x.shape());
    for (Index oi = 0; oi < o[0]; ++oi) {
      for (Index oj = 0; oj < o[1]; ++oj) {
        for (Index c = 0; c < o[2]; ++c) {
          Index bi = 2 * oi, bj = 2 * oj;
          for (Index di = 0; di < 2; ++di) {
            for (Index dj = 0; dj < 2; ++dj) {
              if (x.at(2 * oi + di, 2 * oj + dj, c) > x.at(bi, bj, c)) {
                bi = 2 * oi + di;
                bj = 2 * oj + dj;
              }
            }
          }
          f(oi, oj, c, bi, bj);
        }
      }
    }
  }

  Vec<Scalar> empty_;
};

template <typename Scalar>
class Relu {
 public:
  std::string name() const { return "relu"; }
  Vec<Scalar>& params() { return empty_; }
  const Vec<Scalar>& params() const { return empty_; }
  void init(Rng&) {}

  Shape output_shape(const Shape& in) const { return in; }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    return Tensor<Scalar>(x.shape(), x.values().cwiseMax(Scalar(0)));
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, Eigen::Ref<Vec<Scalar>>) const {
    if (dy.shape() != x.shape()) {
      throw ShapeError("relu backward: gradient " + shape_string(dy.shape()) + " vs input " + shape_string(x.shape()));
    }
    Vec<Scalar> dx = (x.values().array() > Scalar(0)).select(dy.values(), Scalar(0));
    return Tensor<Scalar>(x.shape(), std::move(dx));
  }

  void hash_pattern(const Tensor<Scalar>& x, std::uint64_t& h) const {
    std::uint64_t word = 0;
    for (Index i = 0; i < x.size(); ++i) {
      word = (word << 1) | (x.values()[i] > Scalar(0) ? 1u : 0u);
      if (i % 64 == 63) detail::mix(h, word);
    }
    detail::mix(h, word);
  }

 private:
  Vec<Scalar> empty_;
};

template <typename Scalar>
class Flatten {
 public:
  std::string name() const { return "flatten"; }
  Vec<Scalar>& params() { return empty_; }
  const Vec<Scalar>& params() const { return empty_; }
  void init(Rng&) {}

  Shape output_shape(const Shape& in) const { return {shape_count(in)}; }
  Tensor<Scalar> forward(const Tensor<Scalar>& x) const { return x.reshaped(output_shape(x.shape())); }
  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, Eigen::Ref<Vec<Scalar>>) const {
    if (dy.size() != x.size()) {
      throw ShapeError("flatten backward: gradient " + shape_string(dy.shape()) + " vs input " + shape_string(x.shape()));
    }
    return dy.reshaped(x.shape());
  }
  void hash_pattern(const Tensor<Scalar>&, std::uint64_t&) const {}

 private:
  Vec<Scalar> empty_;
};

// y = W x + b with W stored row-major (out x in), then b.
template <typename Scalar>
class Dense {
 public:
  Dense(Index in, Index out) : in_(in), out_(out), params_(Vec<Scalar>::Zero(in * out + out)) {}

  Index inputs() const { return in_; }
  Index outputs() const { return out_; }
  std::string name() const { return "dense(" + std::to_string(out_) + ")"; }

  Vec<Scalar>& params() { return params_; }
  const Vec<Scalar>& params() const { return params_; }

  void init(Rng& rng) {
    detail::init_uniform<Scalar>(params_.head(in_ * out_), in_, rng, std::sqrt(6.0));
    params_.tail(out_).setZero();
  }

  Shape output_shape(const Shape& in) const {
    if (in.size() != 1 || in[0] != in_) {
      throw ShapeError("dense expects input " + std::to_string(in_) + ", got " + shape_string(in));
    }
    return {out_};
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    output_shape(x.shape());
    Vec<Scalar> y = weights() * x.values() + params_.tail(out_);
    return Tensor<Scalar>({out_}, std::move(y));
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& dy, Eigen::Ref<Vec<Scalar>> dparams) const {
    output_shape(x.shape());
    if (dy.size() != out_) {
      throw ShapeError("dense backward: gradient " + shape_string(dy.shape()) + " vs output " + std::to_string(out_));
    }
    Eigen::Map<RowMat<Scalar>> dw(dparams.data(), out_, in_);
    dw.noalias() += dy.values() * x.values().transpose();
    dparams.tail(out_) += dy.values();
    Vec<Scalar> dx = weights().transpose() * dy.values();
    return Tensor<Scalar>(x.shape(), std::move(dx));
  }

  void hash_pattern(const Tensor<Scalar>&, std::uint64_t&) const {}

 private:
  Eigen::Map<const RowMat<Scalar>> weights() const { return {params_.data(), out_, in_}; }

  Index in_;
  Index out_;
  Vec<Scalar> params_;
};

}  // namespace feint::nn
