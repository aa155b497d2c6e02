#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "feint/errors.hpp"
#include "feint/rng.hpp"
#include "feint/svm.hpp"

using namespace feint;
using svm::Mat;
using svm::Vec;

namespace {

struct Labeled {
  Mat<double> x;
  std::vector<std::string> labels;
  std::vector<int> y;  // +1 for the first class, -1 otherwise
};

Labeled blobs(const std::vector<std::vector<double>>& centers, std::size_t per, double spread, std::uint64_t seed,
              const std::vector<std::string>& names = {}) {
  Rng rng = make_stream(seed, 0);
  std::normal_distribution<double> n(0.0, spread);
  const auto dim = static_cast<Eigen::Index>(centers.front().size());
  Labeled out;
  out.x.resize(static_cast<Eigen::Index>(centers.size() * per), dim);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < per; ++i) {
    for (std::size_t c = 0; c < centers.size(); ++c, ++row) {
      for (Eigen::Index d = 0; d < dim; ++d) out.x(row, d) = centers[c][static_cast<std::size_t>(d)] + n(rng);
      out.labels.push_back(names.empty() ? "c" + std::to_string(c) : names[c]);
      out.y.push_back(c == 0 ? 1 : -1);
    }
  }
  return out;
}

double binary_accuracy(const svm::BinaryModel<double>& m, const Mat<double>& x, const std::vector<int>& y) {
  std::size_t ok = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) ok += m.predict(x.row(i).transpose()) == y[static_cast<std::size_t>(i)];
  return static_cast<double>(ok) / static_cast<double>(x.rows());
}

double multi_accuracy(const svm::MulticlassModel<double>& m, const Mat<double>& x,
                      const std::vector<std::string>& labels) {
  std::size_t ok = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) ok += m.predict(x.row(i).transpose()) == labels[static_cast<std::size_t>(i)];
  return static_cast<double>(ok) / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("rbf kernel") {
  Vec<double> u(2), v(2);
  u << 0, 0;
  v << 1, 1;
  CHECK(svm::rbf(u, u, 1.0) == 1.0);
  CHECK(svm::rbf(u, v, 0.5) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("separated blobs are classified perfectly") {
  const auto d = blobs({{-3, -3}, {3, 3}}, 50, 0.5, 1);
  const auto m = svm::train_binary<double>(d.x, d.y, 1.0, 0.5);
  CHECK(binary_accuracy(m, d.x, d.y) == 1.0);
  CHECK(svm::kkt_violation(m, d.x, d.y) < 2e-3);
  const auto test = blobs({{-3, -3}, {3, 3}}, 50, 0.5, 2);
  CHECK(binary_accuracy(m, test.x, test.y) == 1.0);
}

TEST_CASE("XOR is learned with an RBF kernel") {
  Rng rng = make_stream(3, 0);
  const std::size_t n = 400;
  Mat<double> x(n, 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2 * uniform01(rng) - 1, b = 2 * uniform01(rng) - 1;
    x(static_cast<Eigen::Index>(i), 0) = a;
    x(static_cast<Eigen::Index>(i), 1) = b;
    y[i] = (a > 0) == (b > 0) ? 1 : -1;
  }
  const auto m = svm::train_binary<double>(x, y, 10.0, 2.0);
  CHECK(binary_accuracy(m, x, y) >= 0.95);
}

TEST_CASE("symmetric pair puts the boundary at the midpoint") {
  Mat<double> x(2, 2);
  x << -1, 0, 1, 0;
  const auto m = svm::train_binary<double>(x, {1, -1}, 1.0, 1.0);
  Vec<double> mid(2);
  mid << 0, 0;
  CHECK(std::abs(m.decision(mid)) < 1e-6);
  CHECK(m.predict(x.row(0).transpose()) == 1);
  CHECK(m.predict(x.row(1).transpose()) == -1);
}

TEST_CASE("duplicate points with one label train fine") {
  Mat<double> x(4, 1);
  x << 0, 0, 5, 5;
  const auto m = svm::train_binary<double>(x, {1, 1, -1, -1}, 1.0, 1.0);
  CHECK(binary_accuracy(m, x, {1, 1, -1, -1}) == 1.0);
}

TEST_CASE("binary training validation") {
  Mat<double> x(2, 1);
  x << 0, 1;
  CHECK_THROWS_AS(svm::train_binary<double>(x, {1}, 1.0, 1.0), ArgumentError);
  CHECK_THROWS_AS(svm::train_binary<double>(x, {1, -1}, 0.0, 1.0), ArgumentError);
  CHECK_THROWS_AS(svm::train_binary<double>(x, {1, -1}, 1.0, -1.0), ArgumentError);
  const auto m = svm::train_binary<double>(x, {1, -1}, 1.0, 1.0);
  CHECK_THROWS_AS(m.decision(Vec<double>::Zero(3)), ArgumentError);
}

TEST_CASE("one-vs-rest on three blobs") {
  const auto d = blobs({{0, 4}, {-4, -2}, {4, -2}}, 40, 0.8, 4);
  const auto m = svm::train_multiclass<double>(d.x, d.labels, 1.0, 0.5);
  CHECK(m.classes.size() == 3);
  CHECK(m.models.size() == 3);
  CHECK(multi_accuracy(m, d.x, d.labels) >= 0.95);
}

TEST_CASE("two classes use a single model") {
  const auto d = blobs({{-2}, {2}}, 30, 0.3, 5);
  const auto m = svm::train_multiclass<double>(d.x, d.labels, 1.0, 1.0);
  CHECK(m.models.size() == 1);
  CHECK(multi_accuracy(m, d.x, d.labels) == 1.0);
  CHECK_THROWS_AS(svm::train_multiclass<double>(d.x, std::vector<std::string>(d.labels.size(), "a"), 1.0, 1.0),
                  ArgumentError);
}

TEST_CASE("wide features with five classes") {
  Rng rng = make_stream(6, 0);
  std::vector<std::vector<double>> centers(5, std::vector<double>(512, 0.0));
  for (std::size_t c = 0; c < 5; ++c) {
    for (std::size_t j = 0; j < 512; ++j) centers[c][j] = uniform01(rng);
  }
  const auto d = blobs(centers, 20, 0.05, 7);
  const auto m = svm::train_multiclass<double>(d.x, d.labels, 1.0, 1.0 / 512.0);
  CHECK(multi_accuracy(m, d.x, d.labels) >= 0.95);
}

TEST_CASE("default grids hold the default point") {
  const auto c = svm::default_c_grid();
  const auto g = svm::default_g_grid();
  CHECK(std::find(c.begin(), c.end(), 0.5) != c.end());
  CHECK(std::find(g.begin(), g.end(), 1.0) != g.end());
  CHECK(svm::kDefaultCost == 0.5);
  CHECK(svm::kDefaultGamma == 1.0);
}

TEST_CASE("grid search") {
  const auto d = blobs({{-3, 0}, {3, 0}}, 30, 0.4, 8);
  const auto single = svm::grid_search_cv<double>(d.x, d.labels, 3, {0.5}, {1.0}, 1);
  CHECK(single.best_c == 0.5);
  CHECK(single.best_g == 1.0);
  CHECK(single.all.size() == 1);

  // every point separates the blobs, so the smallest c and g win
  const auto tie = svm::grid_search_cv<double>(d.x, d.labels, 3, {8.0, 0.5, 2.0}, {1.0, 0.5}, 1);
  CHECK(tie.best_accuracy == 1.0);
  CHECK(tie.best_c == 0.5);
  CHECK(tie.best_g == 0.5);
  CHECK(tie.all.size() == 6);

  CHECK_THROWS_AS(svm::grid_search_cv<double>(d.x, d.labels, 1, {1.0}, {1.0}, 1), ArgumentError);
  CHECK_THROWS_AS(svm::grid_search_cv<double>(d.x, d.labels, 3, {}, {1.0}, 1), ArgumentError);
}

TEST_CASE("stratified folds keep class shares") {
  std::vector<std::string> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3 == 0 ? "a" : "b");
  const auto folds = svm::stratified_folds(labels, 5, 1);
  for (std::size_t f = 0; f < 5; ++f) {
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (folds[i] != f) continue;
      (labels[i] == "a" ? a : b)++;
    }
    CHECK(a == 2);
    CHECK(b == 4);
  }
}

TEST_CASE("model text round trip") {
  const auto d = blobs({{0, 4}, {-4, -2}, {4, -2}}, 15, 0.8, 9);
  const auto m = svm::train_multiclass<double>(d.x, d.labels, 2.0, 0.25);
  std::stringstream buf;
  svm::write_model(buf, m);
  const auto back = svm::read_model<double>(buf);
  CHECK(back.classes == m.classes);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    const Vec<double> q = d.x.row(i).transpose();
    CHECK((back.decision_values(q) - m.decision_values(q)).cwiseAbs().maxCoeff() < 1e-12);
  }
  std::stringstream bad("feint-svm 2\n");
  CHECK_THROWS_AS(svm::read_model<double>(bad), FormatError);
}
