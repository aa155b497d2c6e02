#pragma once

#include <Eigen/Dense>

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "feint/errors.hpp"

namespace feint::nn {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_count(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), Index{1}, [](Index a, Index b) { return a * b; });
}

inline std::string shape_string(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out.empty() ? "scalar" : out;
}

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major tensor. Rank-3 tensors are height x width x channels with the
// channel index fastest.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), values_(Vec<Scalar>::Zero(shape_count(shape_))) {}
  Tensor(Shape shape, Vec<Scalar> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_count(shape_)) {
      throw ShapeError("tensor of shape " + shape_string(shape_) + " given " + std::to_string(values_.size()) +
                       " values");
    }
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return values_.size(); }
  Index dim(std::size_t i) const { return shape_.at(i); }

  Vec<Scalar>& values() { return values_; }
  const Vec<Scalar>& values() const { return values_; }

  Scalar& at(Index h, Index w, Index c) { return values_[(h * shape_[1] + w) * shape_[2] + c]; }
  Scalar at(Index h, Index w, Index c) const { return values_[(h * shape_[1] + w) * shape_[2] + c]; }

  Tensor reshaped(Shape s) const { return Tensor(std::move(s), values_); }
  bool all_finite() const { return values_.allFinite(); }

 private:
  Shape shape_;
  Vec<Scalar> values_;
};

using TensorD = Tensor<double>;

}  // namespace feint::nn
