#include "feint/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "feint/csv.hpp"
#include "feint/errors.hpp"

namespace feint {

void DetectionCounts::validate() const {
  if (r > n || r > rn) throw ArgumentError("detection counts: R must not exceed N or RN");
}

double completeness(const DetectionCounts& c) {
  c.validate();
  if (c.n == 0) throw ArgumentError("completeness: N is 0");
  return static_cast<double>(c.r) / static_cast<double>(c.n);
}

double accuracy_rate(const DetectionCounts& c) {
  c.validate();
  if (c.rn == 0) throw ArgumentError("accuracy_rate: RN is 0");
  return static_cast<double>(c.r) / static_cast<double>(c.rn);
}

namespace {

Ratio ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes, Counts counts)
    : classes_(std::move(classes)), counts_(std::move(counts)) {
  const auto k = static_cast<Eigen::Index>(classes_.size());
  if (counts_.rows() != k || counts_.cols() != k) throw ArgumentError("confusion matrix must be square over the classes");
  if ((counts_.array() < 0).any()) throw ArgumentError("confusion matrix counts must be non-negative");
}

ConfusionMatrix ConfusionMatrix::from_labels(const std::vector<std::string>& y_true,
                                             const std::vector<std::string>& y_pred,
                                             std::vector<std::string> classes) {
  if (y_true.size() != y_pred.size()) {
    throw ArgumentError("confusion: " + std::to_string(y_true.size()) + " true labels vs " +
                        std::to_string(y_pred.size()) + " predictions");
  }
  auto index_of = [&](const std::string& s) {
    const auto it = std::find(classes.begin(), classes.end(), s);
    if (it == classes.end()) throw ArgumentError("confusion: label '" + s + "' not in class list");
    return it - classes.begin();
  };
  const auto k = static_cast<Eigen::Index>(classes.size());
  Counts c = Counts::Zero(k, k);
  for (std::size_t i = 0; i < y_true.size(); ++i) ++c(index_of(y_true[i]), index_of(y_pred[i]));
  return ConfusionMatrix(std::move(classes), std::move(c));
}

Ratio ConfusionMatrix::recall(std::size_t k) const {
  return ratio(counts_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)), actual(k));
}

Ratio ConfusionMatrix::precision(std::size_t k) const {
  return ratio(counts_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)), predicted(k));
}

Ratio ConfusionMatrix::accuracy() const { return ratio(counts_.trace(), total()); }

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream os;
  os << "actual\\predicted";
  for (const auto& c : classes_) os << ',' << csv::escape(c);
  os << ",recall\n";
  char buf[32];
  for (std::size_t r = 0; r < classes_.size(); ++r) {
    os << csv::escape(classes_[r]);
    for (std::size_t c = 0; c < classes_.size(); ++c) os << ',' << counts_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    std::snprintf(buf, sizeof buf, "%.6f", recall(r).value);
    os << ',' << buf << '\n';
  }
  os << "precision";
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%.6f", precision(c).value);
    os << ',' << buf;
  }
  std::snprintf(buf, sizeof buf, "%.6f", accuracy().value);
  os << ',' << buf << '\n';
  return os.str();
}

std::string ConfusionMatrix::to_table() const {
  std::size_t w = 9;
  for (const auto& c : classes_) w = std::max(w, c.size());
  for (Eigen::Index i = 0; i < counts_.size(); ++i) w = std::max(w, std::to_string(counts_.data()[i]).size());
  w += 2;
  auto cell = [&](const std::string& s) { return std::string(w - std::min(w, s.size()), ' ') + s; };
  char buf[32];
  std::ostringstream os;
  os << cell("") ;
  for (const auto& c : classes_) os << cell(c);
  os << cell("recall") << '\n';
  for (std::size_t r = 0; r < classes_.size(); ++r) {
    os << cell(classes_[r]);
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      os << cell(std::to_string(counts_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
    }
    const auto rc = recall(r);
    std::snprintf(buf, sizeof buf, rc.undefined ? "%.3f*" : "%.3f", rc.value);
    os << cell(buf) << '\n';
  }
  os << cell("precision");
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const auto p = precision(c);
    std::snprintf(buf, sizeof buf, p.undefined ? "%.3f*" : "%.3f", p.value);
    os << cell(buf);
  }
  std::snprintf(buf, sizeof buf, "acc %.4f", accuracy().value);
  os << cell(buf) << '\n';
  return os.str();
}

}  // namespace feint
