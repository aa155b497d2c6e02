#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace feint {

inline constexpr std::size_t kFlowFeatureCount = 83;

// One statistical flow vector with its class label.
struct FlowRecord {
  Eigen::VectorXd features;
  std::string label;
  std::string source_id;
};

struct FeatureRange {
  double min = 0.0;
  double max = 0.0;
};

// Records plus the label set and per-feature min/max. Built only through make(),
// which enforces the 83-feature, finite-value and label-membership invariants.
class FlowDataset {
 public:
  FlowDataset() = default;

  // class_names follow first appearance; normalization is recomputed over records.
  static FlowDataset make(std::vector<FlowRecord> records);

  const std::vector<FlowRecord>& records() const { return records_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<FeatureRange>& normalization() const { return normalization_; }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t count(const std::string& label) const;
  std::vector<std::size_t> indices_of(const std::string& label) const;
  bool has_class(const std::string& label) const;

  // Min-max scaled copy of a record's features; constant columns map to 0.
  Eigen::VectorXd normalized(const FlowRecord& r) const;
  Eigen::VectorXd normalized(std::size_t index) const { return normalized(records_[index]); }

 private:
  std::vector<FlowRecord> records_;
  std::vector<std::string> class_names_;
  std::vector<FeatureRange> normalization_;
};

// Which CSV columns hold the 83 features and the label. An empty feature list means
// "every column except the label", which must then be exactly 83 columns.
struct FlowSchema {
  std::vector<std::string> feature_columns;
  std::string label_column = "Label";
};

// Reads a flow CSV. NaN becomes 0, +Inf the column's finite max, -Inf its finite min.
FlowDataset load_flow_csv(const std::filesystem::path& path, const FlowSchema& schema = {});
FlowDataset parse_flow_csv(std::istream& in, const FlowSchema& schema = {});

// Writes header f00..f82,Label and values with round-trip precision.
void write_flow_csv(const std::filesystem::path& path, const FlowDataset& ds);
void write_flow_csv(std::ostream& out, const FlowDataset& ds);

std::vector<std::string> default_feature_names();

}  // namespace feint
