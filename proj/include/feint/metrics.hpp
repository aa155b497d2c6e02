#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace feint {

struct DetectionCounts {
  std::size_t n = 0;   // true attacks
  std::size_t rn = 0;  // attacks reported by the method
  std::size_t r = 0;   // reported attacks that are correct

  void validate() const;  // 0 <= r <= min(n, rn)
};

// R / N. Throws ArgumentError when N = 0.
double completeness(const DetectionCounts& c);
// R / RN. Throws ArgumentError when RN = 0.
double accuracy_rate(const DetectionCounts& c);

// A ratio whose denominator was zero is reported as 0 with undefined = true.
struct Ratio {
  double value = 0.0;
  bool undefined = false;
};

class ConfusionMatrix {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  // counts(actual, predicted)
  ConfusionMatrix(std::vector<std::string> classes, Counts counts);

  static ConfusionMatrix from_labels(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                     std::vector<std::string> classes);

  const std::vector<std::string>& classes() const { return classes_; }
  const Counts& counts() const { return counts_; }
  std::int64_t total() const { return counts_.sum(); }
  std::int64_t actual(std::size_t k) const { return counts_.row(static_cast<Eigen::Index>(k)).sum(); }
  std::int64_t predicted(std::size_t k) const { return counts_.col(static_cast<Eigen::Index>(k)).sum(); }

  Ratio recall(std::size_t k) const;
  Ratio precision(std::size_t k) const;
  Ratio accuracy() const;

  std::string to_csv() const;
  // Aligned table with a recall column and a precision row.
  std::string to_table() const;

 private:
  std::vector<std::string> classes_;
  Counts counts_;
};

}  // namespace feint
