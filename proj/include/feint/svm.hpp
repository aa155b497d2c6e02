#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <list>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "feint/errors.hpp"
#include "feint/rng.hpp"

namespace feint::svm {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;  // one sample per row
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kDefaultCost = 0.5;
inline constexpr double kDefaultGamma = 1.0;

// Search grids used when none is configured; they contain the defaults above.
inline std::vector<double> default_c_grid() { return {0.5, 2.0, 8.0, 32.0}; }
inline std::vector<double> default_g_grid() { return {1.0 / 512.0, 1.0 / 64.0, 1.0 / 8.0, 1.0}; }

struct SmoOptions {
  double tol = 1e-3;
  std::size_t max_iter = 1'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
};

// exp(-g * |u - v|^2)
template <typename A, typename B>
auto rbf(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v, typename A::Scalar g) {
  return std::exp(-g * (u - v).squaredNorm());
}

template <typename Scalar>
struct BinaryModel {
  Mat<Scalar> support;  // support vectors as rows
  Vec<Scalar> coef;     // alpha_i * y_i
  Scalar bias = 0;      // decision = sum coef_i k(sv_i, x) + bias
  Scalar gamma = 1;
  Scalar cost = 1;
  std::size_t iterations = 0;

  Eigen::Index dim() const { return support.cols(); }

  template <typename D>
  Scalar decision(const Eigen::MatrixBase<D>& x) const {
    if (x.size() != support.cols()) {
      throw ArgumentError("svm: query has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(support.cols()));
    }
    Scalar s = bias;
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
      s += coef[i] * rbf(support.row(i).transpose(), x, gamma);
    }
    return s;
  }

  template <typename D>
  int predict(const Eigen::MatrixBase<D>& x) const {
    return decision(x) >= 0 ? 1 : -1;
  }
};

namespace detail {

// LRU cache of kernel rows.
template <typename Scalar>
class KernelCache {
 public:
  KernelCache(const Mat<Scalar>& x, Scalar gamma, std::size_t bytes) : x_(x), gamma_(gamma) {
    sq_ = x.rowwise().squaredNorm();
    const std::size_t row_bytes = std::max<std::size_t>(1, static_cast<std::size_t>(x.rows()) * sizeof(Scalar));
    capacity_ = std::max<std::size_t>(2, bytes / row_bytes);
  }

  const Vec<Scalar>& row(Eigen::Index i) {
    auto it = index_.find(i);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    Vec<Scalar> k = x_ * x_.row(i).transpose();
    for (Eigen::Index t = 0; t < k.size(); ++t) {
      const Scalar d2 = std::max(Scalar(0), sq_[t] + sq_[i] - 2 * k[t]);
      k[t] = t == i ? Scalar(1) : std::exp(-gamma_ * d2);
    }
    lru_.emplace_front(i, std::move(k));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  const Mat<Scalar>& x_;
  Scalar gamma_;
  Vec<Scalar> sq_;
  std::size_t capacity_;
  std::list<std::pair<Eigen::Index, Vec<Scalar>>> lru_;
  std::unordered_map<Eigen::Index, typename std::list<std::pair<Eigen::Index, Vec<Scalar>>>::iterator> index_;
};

}  // namespace detail

// C-SVC dual solved by SMO with maximal-violating-pair selection. y holds +1/-1.
template <typename Scalar>
BinaryModel<Scalar> train_binary(const Mat<Scalar>& x, const std::vector<int>& y, Scalar c, Scalar g,
                                 const SmoOptions& opts = {}) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != y.size()) throw ArgumentError("svm: samples and labels differ in count");
  if (!(c > 0) || !(g > 0)) throw ArgumentError("svm: c and g must be > 0");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw ArgumentError("svm: binary labels must be +1 or -1");
  }
  if (!pos || !neg) throw ArgumentError("svm: training data needs both labels");

  detail::KernelCache<Scalar> cache(x, g, opts.cache_bytes);
  Vec<Scalar> alpha = Vec<Scalar>::Zero(n);
  Vec<Scalar> grad = Vec<Scalar>::Constant(n, Scalar(-1));
  auto yd = [&](Eigen::Index t) { return static_cast<Scalar>(y[static_cast<std::size_t>(t)]); };
  auto up = [&](Eigen::Index t) { return yd(t) > 0 ? alpha[t] < c : alpha[t] > 0; };
  auto low = [&](Eigen::Index t) { return yd(t) > 0 ? alpha[t] > 0 : alpha[t] < c; };
  const Scalar tau = Scalar(1e-12);

  std::size_t iter = 0;
  for (;; ++iter) {
    Eigen::Index i = -1, j = -1;
    Scalar gmax = -std::numeric_limits<Scalar>::infinity();
    Scalar gmin = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const Scalar v = -yd(t) * grad[t];
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < static_cast<Scalar>(opts.tol)) break;
    if (iter >= opts.max_iter) {
      throw ConvergenceError("svm: no convergence after " + std::to_string(opts.max_iter) + " iterations");
    }

    const Vec<Scalar> ki = cache.row(i);
    const Vec<Scalar>& kj = cache.row(j);
    const Scalar yi = yd(i), yj = yd(j);
    const Scalar qij = yi * yj * ki[j];
    const Scalar ai_old = alpha[i], aj_old = alpha[j];
    Scalar& ai = alpha[i];
    Scalar& aj = alpha[j];

    if (yi != yj) {
      Scalar quad = 2 + 2 * qij;
      if (quad <= 0) quad = tau;
      const Scalar delta = (-grad[i] - grad[j]) / quad;
      const Scalar diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > 0) {
        if (ai > c) { ai = c; aj = c - diff; }
      } else if (aj > c) {
        aj = c;
        ai = c + diff;
      }
    } else {
      Scalar quad = 2 - 2 * qij;
      if (quad <= 0) quad = tau;
      const Scalar delta = (grad[i] - grad[j]) / quad;
      const Scalar sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) { ai = c; aj = sum - c; }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > c) {
        if (aj > c) { aj = c; ai = sum - c; }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }
    const Scalar di = ai - ai_old, dj = aj - aj_old;
    for (Eigen::Index t = 0; t < n; ++t) {
      grad[t] += yd(t) * (yi * ki[t] * di + yj * kj[t] * dj);
    }
  }

  // rho from free vectors, or the middle of the feasible interval
  Scalar ub = std::numeric_limits<Scalar>::infinity(), lb = -std::numeric_limits<Scalar>::infinity();
  Scalar sum_free = 0;
  std::size_t n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const Scalar yg = yd(t) * grad[t];
    if (alpha[t] >= c) {
      if (yd(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (yd(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const Scalar rho = n_free > 0 ? sum_free / static_cast<Scalar>(n_free) : (ub + lb) / 2;

  BinaryModel<Scalar> m;
  m.gamma = g;
  m.cost = c;
  m.bias = -rho;
  m.iterations = iter;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0) sv.push_back(t);
  }
  m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support.row(static_cast<Eigen::Index>(k)) = x.row(sv[k]);
    m.coef[static_cast<Eigen::Index>(k)] = alpha[sv[k]] * yd(sv[k]);
  }
  return m;
}

// Largest KKT violation of a trained model over its training set (0 at an exact optimum).
template <typename Scalar>
Scalar kkt_violation(const BinaryModel<Scalar>& m, const Mat<Scalar>& x, const std::vector<int>& y) {
  // alphas are recovered by matching support vectors back to rows
  Scalar worst = 0;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    Scalar alpha = 0;
    for (Eigen::Index k = 0; k < m.support.rows(); ++k) {
      if (m.support.row(k) == x.row(t)) {
        alpha = std::abs(m.coef[k]);
        break;
      }
    }
    const Scalar margin = static_cast<Scalar>(y[static_cast<std::size_t>(t)]) * m.decision(x.row(t).transpose());
    Scalar v = 0;
    if (alpha <= 0) v = std::max(Scalar(0), 1 - margin);
    else if (alpha >= m.cost) v = std::max(Scalar(0), margin - 1);
    else v = std::abs(margin - 1);
    worst = std::max(worst, v);
  }
  return worst;
}

// One-vs-rest over classes ordered by descending frequency (first appearance breaks
// ties). Two classes use a single binary model with the more frequent class positive.
template <typename Scalar>
struct MulticlassModel {
  std::vector<std::string> classes;
  std::vector<BinaryModel<Scalar>> models;

  Eigen::Index dim() const { return models.empty() ? 0 : models.front().dim(); }

  template <typename D>
  Vec<Scalar> decision_values(const Eigen::MatrixBase<D>& x) const {
    Vec<Scalar> out(static_cast<Eigen::Index>(classes.size()));
    if (classes.size() == 2) {
      const Scalar d = models.front().decision(x);
      out << d, -d;
      return out;
    }
    for (std::size_t k = 0; k < models.size(); ++k) out[static_cast<Eigen::Index>(k)] = models[k].decision(x);
    return out;
  }

  template <typename D>
  std::size_t predict_index(const Eigen::MatrixBase<D>& x) const {
    Eigen::Index arg = 0;
    decision_values(x).maxCoeff(&arg);
    return static_cast<std::size_t>(arg);
  }

  template <typename D>
  const std::string& predict(const Eigen::MatrixBase<D>& x) const {
    return classes[predict_index(x)];
  }
};

inline std::vector<std::string> classes_by_frequency(const std::vector<std::string>& labels) {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> count;
  for (const auto& l : labels) {
    if (count[l]++ == 0) order.push_back(l);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return count[a] > count[b]; });
  return order;
}

template <typename Scalar>
MulticlassModel<Scalar> train_multiclass(const Mat<Scalar>& x, const std::vector<std::string>& labels, Scalar c,
                                         Scalar g, const SmoOptions& opts = {}) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ArgumentError("svm: samples and labels differ in count");
  }
  MulticlassModel<Scalar> m;
  m.classes = classes_by_frequency(labels);
  if (m.classes.size() < 2) throw ArgumentError("svm: multiclass training needs at least two classes");
  const std::size_t n_models = m.classes.size() == 2 ? 1 : m.classes.size();
  for (std::size_t k = 0; k < n_models; ++k) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == m.classes[k] ? 1 : -1;
    m.models.push_back(train_binary<Scalar>(x, y, c, g, opts));
  }
  return m;
}

struct GridPoint {
  double c = 0;
  double g = 0;
  double accuracy = 0;
};

struct GridResult {
  double best_c = 0;
  double best_g = 0;
  double best_accuracy = -1;
  std::vector<GridPoint> all;
};

// Fold of every sample: each class is shuffled and dealt round-robin over the folds.
inline std::vector<std::size_t> stratified_folds(const std::vector<std::string>& labels, std::size_t folds,
                                                 std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> fold(labels.size());
  std::uint64_t stream = 0;
  for (auto& [name, idx] : by_class) {
    Rng rng = make_stream(seed, ++stream);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = k % folds;
  }
  return fold;
}

// Stratified k-fold search; the best mean accuracy wins, ties go to the smaller c and then g.
template <typename Scalar>
GridResult grid_search_cv(const Mat<Scalar>& x, const std::vector<std::string>& labels, std::size_t folds,
                          std::vector<double> c_grid, std::vector<double> g_grid, std::uint64_t seed,
                          const SmoOptions& opts = {}) {
  if (folds < 2) throw ArgumentError("grid_search_cv: folds must be >= 2");
  if (c_grid.empty() || g_grid.empty()) throw ArgumentError("grid_search_cv: empty grid");
  std::map<std::string, std::size_t> count;
  for (const auto& l : labels) ++count[l];
  for (const auto& [name, n] : count) {
    if (n < folds) {
      throw ArgumentError("grid_search_cv: " + std::to_string(folds) + " folds exceed the " + std::to_string(n) +
                          " samples of class '" + name + "'");
    }
  }
  std::sort(c_grid.begin(), c_grid.end());
  std::sort(g_grid.begin(), g_grid.end());
  const auto fold = stratified_folds(labels, folds, seed);

  GridResult best;
  for (const double c : c_grid) {
    for (const double g : g_grid) {
      double acc_sum = 0;
      for (std::size_t f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (std::size_t i = 0; i < labels.size(); ++i) (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
        Mat<Scalar> xtr(static_cast<Eigen::Index>(tr.size()), x.cols());
        std::vector<std::string> ytr;
        for (std::size_t k = 0; k < tr.size(); ++k) {
          xtr.row(static_cast<Eigen::Index>(k)) = x.row(tr[k]);
          ytr.push_back(labels[static_cast<std::size_t>(tr[k])]);
        }
        std::size_t correct = 0;
        if (classes_by_frequency(ytr).size() < 2) {
          for (const auto t : te) correct += labels[static_cast<std::size_t>(t)] == ytr.front();
        } else {
          const auto m = train_multiclass<Scalar>(xtr, ytr, static_cast<Scalar>(c), static_cast<Scalar>(g), opts);
          for (const auto t : te) correct += m.predict(x.row(t).transpose()) == labels[static_cast<std::size_t>(t)];
        }
        acc_sum += te.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(te.size());
      }
      const double acc = acc_sum / static_cast<double>(folds);
      best.all.push_back({c, g, acc});
      if (acc > best.best_accuracy) {
        best.best_c = c;
        best.best_g = g;
        best.best_accuracy = acc;
      }
    }
  }
  return best;
}

// Text format:
//   feint-svm 1
//   classes <n>        then one class name per line
//   models <m>
//   model <k> gamma <g> cost <c> bias <b> sv <count> dim <d>
//   <coef> <x_1> ... <x_d>      one line per support vector
template <typename Scalar>
void write_model(std::ostream& out, const MulticlassModel<Scalar>& m) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "feint-svm 1\nclasses " << m.classes.size() << '\n';
  for (const auto& c : m.classes) out << c << '\n';
  out << "models " << m.models.size() << '\n';
  for (std::size_t k = 0; k < m.models.size(); ++k) {
    const auto& b = m.models[k];
    out << "model " << k << " gamma " << num(b.gamma) << " cost " << num(b.cost) << " bias " << num(b.bias) << " sv "
        << b.support.rows() << " dim " << b.support.cols() << '\n';
    for (Eigen::Index i = 0; i < b.support.rows(); ++i) {
      out << num(b.coef[i]);
      for (Eigen::Index q = 0; q < b.support.cols(); ++q) out << ' ' << num(b.support(i, q));
      out << '\n';
    }
  }
}

template <typename Scalar>
MulticlassModel<Scalar> read_model(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string w;
    if (!(in >> w) || w != word) throw FormatError("svm model: expected '" + word + "'");
  };
  MulticlassModel<Scalar> m;
  expect("feint-svm");
  int version = 0;
  if (!(in >> version) || version != 1) throw FormatError("svm model: unsupported version");
  expect("classes");
  std::size_t n = 0;
  if (!(in >> n)) throw FormatError("svm model: bad class count");
  std::string line;
  std::getline(in, line);
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::getline(in, line)) throw FormatError("svm model: truncated class list");
    m.classes.push_back(line);
  }
  expect("models");
  std::size_t n_models = 0;
  if (!(in >> n_models)) throw FormatError("svm model: bad model count");
  for (std::size_t k = 0; k < n_models; ++k) {
    BinaryModel<Scalar> b;
    std::size_t idx = 0;
    Eigen::Index sv = 0, dim = 0;
    double gamma = 0, cost = 0, bias = 0;
    expect("model");
    in >> idx;
    expect("gamma");
    in >> gamma;
    expect("cost");
    in >> cost;
    expect("bias");
    in >> bias;
    expect("sv");
    in >> sv;
    expect("dim");
    if (!(in >> dim) || sv < 0 || dim < 0) throw FormatError("svm model: bad model header");
    b.gamma = static_cast<Scalar>(gamma);
    b.cost = static_cast<Scalar>(cost);
    b.bias = static_cast<Scalar>(bias);
    b.support.resize(sv, dim);
    b.coef.resize(sv);
    for (Eigen::Index i = 0; i < sv; ++i) {
      double v = 0;
      if (!(in >> v)) throw FormatError("svm model: truncated support vectors");
      b.coef[i] = static_cast<Scalar>(v);
      for (Eigen::Index q = 0; q < dim; ++q) {
        if (!(in >> v)) throw FormatError("svm model: truncated support vectors");
        b.support(i, q) = static_cast<Scalar>(v);
      }
    }
    m.models.push_back(std::move(b));
  }
  if (m.classes.size() < 2 || m.models.size() != (m.classes.size() == 2 ? 1 : m.classes.size())) {
    throw FormatError("svm model: class and model counts disagree");
  }
  return m;
}

}  // namespace feint::svm
