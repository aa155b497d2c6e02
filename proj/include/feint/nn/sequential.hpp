#pragma once

#include <variant>
#include <vector>

#include "feint/nn/layers.hpp"

namespace feint::nn {

template <typename Scalar>
using Layer = std::variant<Conv2d<Scalar>, MaxPool2d<Scalar>, Relu<Scalar>, Flatten<Scalar>, Dense<Scalar>>;

// Layer chain whose shapes are checked as layers are added.
template <typename Scalar>
class Sequential {
 public:
  Sequential() = default;
  explicit Sequential(Shape input_shape) : input_shape_(std::move(input_shape)), output_shape_(input_shape_) {}

  template <typename L>
  Sequential& add(L layer) {
    output_shape_ = layer.output_shape(output_shape_);
    layers_.emplace_back(std::move(layer));
    return *this;
  }

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  const std::vector<Layer<Scalar>>& layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }

  // Input shape followed by the output shape of every layer.
  std::vector<Shape> shape_chain() const {
    std::vector<Shape> out{input_shape_};
    for (const auto& l : layers_) out.push_back(std::visit([&](const auto& x) { return x.output_shape(out.back()); }, l));
    return out;
  }

  void init(Rng& rng) {
    for (auto& l : layers_) std::visit([&](auto& x) { x.init(rng); }, l);
  }

  std::vector<Vec<Scalar>*> parameters() {
    std::vector<Vec<Scalar>*> out;
    for (auto& l : layers_) out.push_back(std::visit([](auto& x) { return &x.params(); }, l));
    return out;
  }
  std::vector<const Vec<Scalar>*> parameters() const {
    std::vector<const Vec<Scalar>*> out;
    for (const auto& l : layers_) out.push_back(std::visit([](const auto& x) { return &x.params(); }, l));
    return out;
  }
  Index parameter_count() const {
    Index n = 0;
    for (const auto* p : parameters()) n += p->size();
    return n;
  }
  std::vector<Vec<Scalar>> zero_grads() const {
    std::vector<Vec<Scalar>> out;
    for (const auto* p : parameters()) out.push_back(Vec<Scalar>::Zero(p->size()));
    return out;
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    check_input(x);
    Tensor<Scalar> cur = x;
    for (const auto& l : layers_) cur = std::visit([&](const auto& layer) { return layer.forward(cur); }, l);
    return cur;
  }

  // acts[0] is the input, acts[i + 1] the output of layer i.
  std::vector<Tensor<Scalar>> forward_all(const Tensor<Scalar>& x) const {
    check_input(x);
    std::vector<Tensor<Scalar>> acts{x};
    acts.reserve(layers_.size() + 1);
    for (const auto& l : layers_) {
      acts.push_back(std::visit([&](const auto& layer) { return layer.forward(acts.back()); }, l));
    }
    return acts;
  }

  // Adds parameter gradients into grads (one vector per layer) and returns the input gradient.
  Tensor<Scalar> backward(const std::vector<Tensor<Scalar>>& acts, const Tensor<Scalar>& dy,
                          std::vector<Vec<Scalar>>& grads) const {
    if (acts.size() != layers_.size() + 1 || grads.size() != layers_.size()) {
      throw ShapeError("sequential backward: activations/gradients do not match the layer count");
    }
    Tensor<Scalar> g = dy;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      g = std::visit([&](const auto& layer) { return layer.backward(acts[i], g, grads[i]); }, layers_[i]);
    }
    return g;
  }

  // Fingerprint of every ReLU sign and pooling argmax; changes when a kink is crossed.
  std::uint64_t activation_pattern(const std::vector<Tensor<Scalar>>& acts) const {
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      std::visit([&](const auto& layer) { layer.hash_pattern(acts[i], h); }, layers_[i]);
    }
    return h;
  }

 private:
  void check_input(const Tensor<Scalar>& x) const {
    if (x.shape() != input_shape_) {
      throw ShapeError("model expects input " + shape_string(input_shape_) + ", got " + shape_string(x.shape()));
    }
  }

  Shape input_shape_;
  Shape output_shape_;
  std::vector<Layer<Scalar>> layers_;
};

}  // namespace feint::nn
