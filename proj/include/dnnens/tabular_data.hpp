#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dnnens {

struct DatasetSchema {
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::string label_column;
  std::size_t n_classes = 0;
  // Index i is the text of class i (first-appearance order at load time).
  std::vector<std::string> class_names;

  // Throws ConfigError unless n_classes >= 2, n_features >= 1 and class
  // names are unique.
  void validate() const;
};

struct Dataset {
  DatasetSchema schema;
  Eigen::MatrixXd features;  // samples x features
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }

  // Rows in the given order; duplicates allowed.
  Dataset subset(std::span<const std::size_t> rows) const;

  // Throws DataError on non-finite features or out-of-range labels.
  void validate() const;
};

struct CsvOptions {
  char delimiter = ',';
  bool has_header = true;
  // Label column by header name; takes precedence over label_index.
  std::string label_name;
  // Label column by position. Negative counts from the end (-1 = last).
  std::optional<long> label_index;
  // When non-empty, labels must be one of these (index = class id). Used to
  // load a test file with the class order of its training file.
  std::vector<std::string> known_classes;
};

/// Reads a delimited text file. Labels are encoded to dense indices in order
/// of first appearance unless `known_classes` fixes the order. Every error
/// is a DataError whose message carries the 1-based line number.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

// Writes features with round-trip precision so load_csv reproduces them.
void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               char delimiter = ',');

struct SplitSpec {
  double train_fraction = 0.8;
  bool stratified = true;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Random train/test partition. Under stratification each class is split
/// separately and class quotas are apportioned by largest remainder so the
/// overall train size is round(fraction * S).
SplitIndices split_indices(std::span<const int> labels, std::size_t n_classes,
                           const SplitSpec& spec);

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

struct NormalizerState {
  static constexpr double kStdFloor = 1e-12;

  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // population, floored at kStdFloor
};

NormalizerState fit_normalizer(const Dataset& train);
Dataset apply_normalizer(const NormalizerState& state, const Dataset& dataset);
void apply_normalizer_inplace(const NormalizerState& state,
                              Eigen::MatrixXd& features);

}  // namespace dnnens
