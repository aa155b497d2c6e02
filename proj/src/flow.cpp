#include "feint/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "feint/csv.hpp"
#include "feint/errors.hpp"

namespace feint {

FlowDataset FlowDataset::make(std::vector<FlowRecord> records) {
  FlowDataset ds;
  std::vector<FeatureRange> ranges(kFlowFeatureCount,
                                   {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const auto& r : records) {
    if (static_cast<std::size_t>(r.features.size()) != kFlowFeatureCount) {
      throw SchemaError("flow record " + r.source_id + " has " + std::to_string(r.features.size()) +
                        " features, expected 83");
    }
    if (!r.features.allFinite()) throw SchemaError("flow record " + r.source_id + " has non-finite features");
    if (std::find(ds.class_names_.begin(), ds.class_names_.end(), r.label) == ds.class_names_.end()) {
      ds.class_names_.push_back(r.label);
    }
    for (std::size_t q = 0; q < kFlowFeatureCount; ++q) {
      ranges[q].min = std::min(ranges[q].min, r.features[q]);
      ranges[q].max = std::max(ranges[q].max, r.features[q]);
    }
  }
  if (records.empty()) ranges.assign(kFlowFeatureCount, {0.0, 0.0});
  ds.normalization_ = std::move(ranges);
  ds.records_ = std::move(records);
  return ds;
}

std::size_t FlowDataset::count(const std::string& label) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [&](const FlowRecord& r) { return r.label == label; }));
}

std::vector<std::size_t> FlowDataset::indices_of(const std::string& label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].label == label) out.push_back(i);
  }
  return out;
}

bool FlowDataset::has_class(const std::string& label) const {
  return std::find(class_names_.begin(), class_names_.end(), label) != class_names_.end();
}

Eigen::VectorXd FlowDataset::normalized(const FlowRecord& r) const {
  Eigen::VectorXd out(kFlowFeatureCount);
  for (std::size_t q = 0; q < kFlowFeatureCount; ++q) {
    const double span = normalization_[q].max - normalization_[q].min;
    out[q] = span > 0.0 ? (r.features[q] - normalization_[q].min) / span : 0.0;
  }
  return out;
}

std::vector<std::string> default_feature_names() {
  std::vector<std::string> names;
  names.reserve(kFlowFeatureCount);
  char buf[8];
  for (std::size_t q = 0; q < kFlowFeatureCount; ++q) {
    std::snprintf(buf, sizeof buf, "f%02zu", q);
    names.emplace_back(buf);
  }
  return names;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\xEF\xBB\xBF");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_value(const std::string& raw, std::size_t line_no, const std::string& column) {
  const auto text = trim(raw);
  if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw SchemaError("line " + std::to_string(line_no) + ", column '" + column + "': not numeric: " + text);
  }
  return v;
}

}  // namespace

FlowDataset parse_flow_csv(std::istream& in, const FlowSchema& schema) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw EmptyDatasetError("flow CSV is empty");
  auto header = csv::split(line);
  for (auto& h : header) h = trim(h);

  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t i = 0; i < header.size(); ++i) column_of.emplace(header[i], i);

  const auto label_it = column_of.find(schema.label_column);
  if (label_it == column_of.end()) throw SchemaError("label column '" + schema.label_column + "' not in header");
  const std::size_t label_col = label_it->second;

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != label_col) {
        feature_cols.push_back(i);
        feature_names.push_back(header[i]);
      }
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      const auto it = column_of.find(name);
      if (it == column_of.end()) throw SchemaError("feature column '" + name + "' not in header");
      feature_cols.push_back(it->second);
      feature_names.push_back(name);
    }
  }
  if (feature_cols.size() != kFlowFeatureCount) {
    throw SchemaError("schema maps " + std::to_string(feature_cols.size()) + " feature columns, expected 83");
  }

  std::vector<FlowRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw SchemaError("line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                        " columns, header has " + std::to_string(header.size()));
    }
    FlowRecord r;
    r.features.resize(kFlowFeatureCount);
    for (std::size_t q = 0; q < kFlowFeatureCount; ++q) {
      r.features[q] = parse_value(fields[feature_cols[q]], line_no, feature_names[q]);
    }
    r.label = trim(fields[label_col]);
    r.source_id = "row:" + std::to_string(records.size());
    records.push_back(std::move(r));
  }
  if (records.empty()) throw EmptyDatasetError("flow CSV has a header but no rows");

  // Sanitize per column against the finite range.
  for (std::size_t q = 0; q < kFlowFeatureCount; ++q) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      if (std::isfinite(r.features[q])) {
        lo = std::min(lo, r.features[q]);
        hi = std::max(hi, r.features[q]);
      }
    }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    for (auto& r : records) {
      double& v = r.features[q];
      if (std::isnan(v)) v = 0.0;
      else if (v == std::numeric_limits<double>::infinity()) v = hi;
      else if (v == -std::numeric_limits<double>::infinity()) v = lo;
    }
  }
  return FlowDataset::make(std::move(records));
}

FlowDataset load_flow_csv(const std::filesystem::path& path, const FlowSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read flow CSV: " + path.string());
  return parse_flow_csv(in, schema);
}

void write_flow_csv(std::ostream& out, const FlowDataset& ds) {
  for (const auto& name : default_feature_names()) out << name << ',';
  out << "Label\n";
  char buf[32];
  for (const auto& r : ds.records()) {
    for (std::size_t q = 0; q < kFlowFeatureCount; ++q) {
      std::snprintf(buf, sizeof buf, "%.17g", r.features[q]);
      out << buf << ',';
    }
    out << csv::escape(r.label) << '\n';
  }
}

void write_flow_csv(const std::filesystem::path& path, const FlowDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write flow CSV: " + path.string());
  write_flow_csv(out, ds);
}

}  // namespace feint
