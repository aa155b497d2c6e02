#include <doctest.h>

#include <sstream>

#include "feint/errors.hpp"
#include "feint/nn/birnn.hpp"
#include "feint/nn/cnn.hpp"
#include "feint/nn/grad_check.hpp"
#include "feint/nn/serialize.hpp"
#include "feint/rng.hpp"

using namespace feint;
using namespace feint::nn;

namespace {

Vec<double> random_vec(Index n, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng = make_stream(seed, 0);
  Vec<double> v(n);
  for (Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * uniform01(rng);
  return v;
}

std::vector<Vec<double>> random_steps(std::size_t n, Index width, std::uint64_t seed) {
  std::vector<Vec<double>> out;
  for (std::size_t t = 0; t < n; ++t) out.push_back(random_vec(width, seed * 100 + t));
  return out;
}

// Two classes that differ in the mean of the first 50 cells.
void separable_set(std::vector<TensorD>& xs, std::vector<int>& ys, std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    Eigen::VectorXd v(100);
    for (Index j = 0; j < 100; ++j) v[j] = 0.3 * uniform01(rng) + (j < 50 && y == 1 ? 0.6 : 0.0);
    xs.push_back(reshape_flow(v));
    ys.push_back(y);
  }
}

std::vector<Vec<double>> params_of(const CnnFeatureExtractor<double>& m) {
  std::vector<Vec<double>> out;
  for (const auto* s : {&m.body(), &m.head()}) {
    for (const auto* p : s->parameters()) out.push_back(*p);
  }
  return out;
}

}  // namespace

TEST_CASE("extractor shape chain") {
  const CnnFeatureExtractor<double> m(CnnConfig{}, 1);
  const std::vector<Shape> expect{{10, 10, 1}, {10, 10, 32}, {5, 5, 32}, {5, 5, 64}, {1600}, {512}, {5}};
  CHECK(m.table_shapes() == expect);
  CHECK(m.features(TensorD({10, 10, 1})).size() == 512);
  CHECK_THROWS_AS(m.features(TensorD({9, 10, 1})), ShapeError);
}

TEST_CASE("sequential rejects mismatched layers") {
  Sequential<double> s({8});
  s.add(Dense<double>(8, 4));
  CHECK_THROWS_AS(s.add(Dense<double>(5, 2)), ShapeError);
  Sequential<double> c({6, 6, 2});
  CHECK_THROWS_AS(c.add(Conv2d<double>(3, 4)), ShapeError);
}

TEST_CASE("gradient check: conv stack") {
  const CnnFeatureExtractor<double> m(CnnConfig{10, 4, 8, 32, 5}, 1);
  const auto r = grad_check(m.body(), TensorD({10, 10, 1}, random_vec(100, 5, 0, 1)), 1e-5, 3);
  CHECK(r.checked > 1000);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("gradient check: dense only") {
  Sequential<double> d({8});
  d.add(Dense<double>(8, 6)).add(Dense<double>(6, 3));
  Rng rng = make_stream(2, 0);
  d.init(rng);
  const auto r = grad_check(d, TensorD({8}, random_vec(8, 9)), 1e-5, 1);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("gradient check: recurrent cell and bi-rnn") {
  const BiRnnEncoder<double> e(6, 4, 1);
  const auto cell = grad_check(e.forward_cell(), random_vec(6, 1), random_vec(4, 2, -0.5, 0.5), 1e-5);
  CHECK(cell.max_rel_error < 1e-4);
  const auto full = grad_check(e, random_steps(7, 6, 3), 1e-5);
  CHECK(full.checked > 0);
  CHECK(full.max_rel_error < 1e-4);
}

TEST_CASE("max pooling routes the gradient to the maximum") {
  const MaxPool2d<double> pool;
  TensorD x({4, 4, 1}, random_vec(16, 4));
  const auto y = pool.forward(x);
  CHECK(y.shape() == Shape{2, 2, 1});
  Vec<double> none(0);
  const auto dx = pool.backward(x, TensorD({2, 2, 1}, Vec<double>::Ones(4)), none);
  CHECK(dx.values().sum() == doctest::Approx(4.0));
  for (Index i = 0; i < 16; ++i) {
    if (dx.values()[i] != 0.0) CHECK((y.values().array() == x.values()[i]).any());
  }
}

TEST_CASE("flow reshape") {
  const auto zero = reshape_flow(Eigen::VectorXd::Zero(83));
  CHECK(zero.shape() == Shape{10, 10, 1});
  CHECK(zero.values().isZero());
  const auto full = reshape_flow(Eigen::VectorXd::Ones(83));
  CHECK(full.values().head(83).isOnes());
  CHECK(full.values().tail(17).isZero());
  CHECK(full.values()[99] == 0.0);
  CHECK_THROWS_AS(reshape_flow(Eigen::VectorXd::Ones(101)), ShapeError);
}

TEST_CASE("features are a pure function of the input") {
  const CnnFeatureExtractor<double> m(CnnConfig{10, 8, 16, 64, 3}, 4);
  const auto x = reshape_flow(random_vec(83, 6, 0, 1));
  CHECK(m.features(x) == m.features(x));
  CHECK(m.features(TensorD({10, 10, 1})).isZero());
  const auto p = m.probabilities(x);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p.minCoeff() > 0.0);
}

TEST_CASE("training separates two easy classes") {
  std::vector<TensorD> xs;
  std::vector<int> ys;
  separable_set(xs, ys, 200, 1);
  CnnFeatureExtractor<double> m(CnnConfig{10, 4, 8, 32, 2}, 2);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  cfg.validation_fraction = 0.1;
  const auto report = train_softmax_head(m, xs, ys, cfg);
  REQUIRE(report.curve.size() == 5);
  CHECK(report.curve.back().train_loss < report.curve.front().train_loss);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Index arg = 0;
    m.probabilities(xs[i]).maxCoeff(&arg);
    correct += arg == ys[i];
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(xs.size()) >= 0.99);
}

TEST_CASE("zero epochs and zero learning rate") {
  std::vector<TensorD> xs;
  std::vector<int> ys;
  separable_set(xs, ys, 40, 2);
  CnnFeatureExtractor<double> m(CnnConfig{10, 4, 8, 16, 2}, 3);
  const auto before = params_of(m);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK(train_softmax_head(m, xs, ys, cfg).curve.empty());
  CHECK(params_of(m) == before);

  cfg.epochs = 3;
  cfg.learning_rate = 0.0;
  const auto report = train_softmax_head(m, xs, ys, cfg);
  REQUIRE(report.curve.size() == 3);
  CHECK(report.curve[1].train_loss == doctest::Approx(report.curve[0].train_loss).epsilon(1e-12));
  CHECK(report.curve[2].train_loss == doctest::Approx(report.curve[0].train_loss).epsilon(1e-12));
  CHECK(params_of(m) == before);
}

TEST_CASE("training input validation") {
  CnnFeatureExtractor<double> m(CnnConfig{10, 4, 8, 16, 2}, 3);
  TrainConfig cfg;
  CHECK_THROWS_AS(train_softmax_head(m, {}, {}, cfg), EmptyDatasetError);
  std::vector<TensorD> xs(4, TensorD({10, 10, 1}));
  CHECK_THROWS_AS(train_softmax_head(m, xs, {0, 0, 0, 0}, cfg), ArgumentError);
  CHECK_THROWS_AS(train_softmax_head(m, xs, {0, 1, 2, 0}, cfg), ArgumentError);
  CHECK_THROWS_AS(train_softmax_head(m, xs, {0, 1}, cfg), ArgumentError);
}

TEST_CASE("training is deterministic given the seed") {
  std::vector<TensorD> xs;
  std::vector<int> ys;
  separable_set(xs, ys, 60, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 9;
  CnnFeatureExtractor<double> a(CnnConfig{10, 4, 8, 16, 2}, 5), b(CnnConfig{10, 4, 8, 16, 2}, 5);
  train_softmax_head(a, xs, ys, cfg);
  train_softmax_head(b, xs, ys, cfg);
  CHECK(params_of(a) == params_of(b));
}

TEST_CASE("bi-rnn encoding") {
  const BiRnnEncoder<double> e(6, 4, 7);
  CHECK(e.encoding_size() == 8);
  const auto steps = random_steps(5, 6, 8);
  const auto enc = e.encode(steps);
  CHECK(enc.size() == 8);
  CHECK(enc.cwiseAbs().maxCoeff() < 1.0);

  auto reversed = steps;
  std::reverse(reversed.begin(), reversed.end());
  const auto swapped = e.swapped().encode(reversed);
  CHECK((swapped.head(4) - enc.tail(4)).norm() < 1e-12);
  CHECK((swapped.tail(4) - enc.head(4)).norm() < 1e-12);

  // a single step: both directions see the same input from a zero state
  const auto one = e.encode({steps[0]});
  CHECK((one.head(4) - e.forward_cell().step(steps[0], Vec<double>::Zero(4))).norm() < 1e-15);
  CHECK((one.tail(4) - e.backward_cell().step(steps[0], Vec<double>::Zero(4))).norm() < 1e-15);
  CHECK_THROWS_AS(e.encode({}), ArgumentError);
  CHECK_THROWS_AS(e.encode({Vec<double>::Zero(5)}), ShapeError);
}

TEST_CASE("parameter files round trip") {
  const CnnFeatureExtractor<double> m(CnnConfig{10, 4, 8, 16, 3}, 11);
  std::stringstream buf;
  write_param_file(buf, m.to_param_file());
  const auto back = CnnFeatureExtractor<double>::from_param_file(read_param_file(buf));
  const auto x = reshape_flow(random_vec(83, 12, 0, 1));
  CHECK(back.logits(x) == m.logits(x));

  std::stringstream junk("not a parameter file at all");
  CHECK_THROWS_AS(read_param_file(junk), FormatError);

  const BiRnnEncoder<double> e(5, 3, 2);
  std::stringstream rb;
  write_param_file(rb, e.to_param_file());
  const auto pf = read_param_file(rb);
  CHECK_THROWS_AS(CnnFeatureExtractor<double>::from_param_file(pf), FormatError);
}

TEST_CASE("float extractor agrees with double") {
  const CnnFeatureExtractor<double> d(CnnConfig{10, 4, 8, 16, 3}, 11);
  const auto f = CnnFeatureExtractor<float>::from_param_file(d.to_param_file());
  const auto x = random_vec(83, 13, 0, 1);
  const auto fd = d.features(reshape_flow(x));
  const auto ff = f.features(reshape_flow<float>(x));
  CHECK((fd - ff.cast<double>()).cwiseAbs().maxCoeff() < 1e-4);
}
