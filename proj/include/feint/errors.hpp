#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace feint {

// Malformed fast-alert text. offset is the byte position inside the line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::string reason)
      : std::runtime_error("parse error at byte " + std::to_string(offset) + ": " + reason),
        offset_(offset),
        reason_(std::move(reason)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t offset_;
  std::string reason_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corrupt or version-mismatched persisted artifact.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t epoch, const std::string& what)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every violation found while validating a pipeline config, not only the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "invalid config";
    for (const auto& v : items) out += "; " + v;
    return out;
  }
  std::vector<std::string> violations_;
};

// A pipeline stage was invoked before the stages it depends on produced their artifacts.
class PrerequisiteError : public std::runtime_error {
 public:
  explicit PrerequisiteError(std::vector<std::string> missing)
      : std::runtime_error(join(missing)), missing_(std::move(missing)) {}

  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "missing prerequisite stage(s):";
    for (const auto& v : items) out += " " + v;
    return out;
  }
  std::vector<std::string> missing_;
};

}  // namespace feint
