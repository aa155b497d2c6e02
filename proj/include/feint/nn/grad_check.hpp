#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "feint/nn/birnn.hpp"
#include "feint/nn/sequential.hpp"
#include "feint/rng.hpp"

namespace feint::nn {

template <typename Scalar>
struct GradCheckResult {
  Scalar max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a ReLU or pooling kink
};

template <typename Scalar>
struct Probe {
  Scalar loss;
  std::uint64_t pattern = 0;
};

// Compares analytic[k][i] with the central difference of eval() in vars[k][i].
// |a - n| / max(|a|, |n|, floor); eval returns the loss and the activation pattern.
template <typename Scalar, typename Eval>
GradCheckResult<Scalar> check_variables(const std::vector<Vec<Scalar>*>& vars,
                                        const std::vector<Vec<Scalar>>& analytic, Eval&& eval, Scalar eps,
                                        Scalar floor = Scalar(1e-7)) {
  if (!(eps > 0)) throw ArgumentError("grad_check: eps must be > 0");
  GradCheckResult<Scalar> r;
  const std::uint64_t base = eval().pattern;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    auto& v = *vars[k];
    for (Index i = 0; i < v.size(); ++i) {
      const Scalar keep = v[i];
      v[i] = keep + eps;
      const Probe<Scalar> plus = eval();
      v[i] = keep - eps;
      const Probe<Scalar> minus = eval();
      v[i] = keep;
      if (plus.pattern != base || minus.pattern != base) {
        ++r.skipped;
        continue;
      }
      const Scalar numeric = (plus.loss - minus.loss) / (2 * eps);
      const Scalar a = analytic[k][i];
      const Scalar denom = std::max({std::abs(a), std::abs(numeric), floor});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(a - numeric) / denom);
      ++r.checked;
    }
  }
  return r;
}

template <typename Scalar>
Vec<Scalar> random_projection(Index n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0x67636b);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec<Scalar> r(n);
  for (Index i = 0; i < n; ++i) r[i] = static_cast<Scalar>(u(rng));
  return r;
}

// Checks every parameter and the input of a layer chain under L = <r, model(x)>.
template <typename Scalar>
GradCheckResult<Scalar> grad_check(const Sequential<Scalar>& model, const Tensor<Scalar>& input, Scalar eps,
                                   std::uint64_t seed = 0) {
  Sequential<Scalar> m = model;
  Tensor<Scalar> x = input;
  const Vec<Scalar> r = random_projection<Scalar>(shape_count(m.output_shape()), seed);

  const auto acts = m.forward_all(x);
  auto grads = m.zero_grads();
  const Tensor<Scalar> dx = m.backward(acts, Tensor<Scalar>(m.output_shape(), r), grads);
  grads.push_back(dx.values());

  auto vars = m.parameters();
  vars.push_back(&x.values());
  auto eval = [&] {
    const auto a = m.forward_all(x);
    return Probe<Scalar>{r.dot(a.back().values()), m.activation_pattern(a)};
  };
  return check_variables<Scalar>(vars, grads, eval, eps);
}

// One recurrent step, checking parameters, input and previous state.
template <typename Scalar>
GradCheckResult<Scalar> grad_check(const RnnCell<Scalar>& cell, const Vec<Scalar>& input, const Vec<Scalar>& state,
                                   Scalar eps, std::uint64_t seed = 0) {
  RnnCell<Scalar> c = cell;
  Vec<Scalar> x = input, h = state;
  const Vec<Scalar> r = random_projection<Scalar>(c.hidden(), seed);
  Vec<Scalar> dp = Vec<Scalar>::Zero(c.params().size());
  auto [dx, dh] = c.backward(x, h, c.step(x, h), r, dp);
  auto eval = [&] { return Probe<Scalar>{r.dot(c.step(x, h)), 0}; };
  return check_variables<Scalar>({&c.params(), &x, &h}, {dp, dx, dh}, eval, eps);
}

// Whole encoder by backpropagation through time, checking both cells and every step.
template <typename Scalar>
GradCheckResult<Scalar> grad_check(const BiRnnEncoder<Scalar>& encoder, const std::vector<Vec<Scalar>>& steps,
                                   Scalar eps, std::uint64_t seed = 0) {
  BiRnnEncoder<Scalar> e = encoder;
  std::vector<Vec<Scalar>> xs = steps;
  const Vec<Scalar> r = random_projection<Scalar>(e.encoding_size(), seed);
  typename BiRnnEncoder<Scalar>::Trace trace;
  e.encode(xs, trace);
  Vec<Scalar> df = Vec<Scalar>::Zero(e.forward_cell().params().size());
  Vec<Scalar> db = Vec<Scalar>::Zero(e.backward_cell().params().size());
  std::vector<Vec<Scalar>> dsteps;
  e.backward(xs, trace, r, df, db, &dsteps);

  std::vector<Vec<Scalar>*> vars = e.parameters();
  std::vector<Vec<Scalar>> analytic{df, db};
  for (std::size_t t = 0; t < xs.size(); ++t) {
    vars.push_back(&xs[t]);
    analytic.push_back(dsteps[t]);
  }
  auto eval = [&] { return Probe<Scalar>{r.dot(e.encode(xs)), 0}; };
  return check_variables<Scalar>(vars, analytic, eval, eps);
}

}  // namespace feint::nn
