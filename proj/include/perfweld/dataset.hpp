#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace perfweld {

// Named feature columns plus one response column.
struct DatasetSchema {
  std::vector<std::string> feature_names;
  std::string response_name = "time_seconds";

  std::size_t n_features() const { return feature_names.size(); }
  std::optional<std::size_t> feature_index(const std::string& name) const;
  bool has_feature(const std::string& name) const { return feature_index(name).has_value(); }

  void validate() const;  // unique names, at least one feature

  bool operator==(const DatasetSchema&) const = default;
};

// Rows of feature vectors with measured response times (seconds, positive).
// Feature storage is row-major and flat. Immutable after construction by
// convention; nothing mutates a dataset once built.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(DatasetSchema schema) : schema_(std::move(schema)) {}

  const DatasetSchema& schema() const { return schema_; }
  std::size_t size() const { return responses_.size(); }
  bool empty() const { return responses_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * schema_.n_features(), schema_.n_features()};
  }
  double feature(std::size_t row, std::size_t col) const {
    return features_[row * schema_.n_features() + col];
  }
  double response(std::size_t i) const { return responses_[i]; }
  const std::vector<double>& responses() const { return responses_; }

  // Throws std::invalid_argument on length mismatch or non-positive response.
  void add_row(std::span<const double> features, double response);

  Dataset subset(const std::vector<std::size_t>& rows) const;

 private:
  DatasetSchema schema_;
  std::vector<double> features_;
  std::vector<double> responses_;
};

// CSV I/O. Header must match the schema exactly (feature names in order,
// then the response column). Errors carry the 1-based data row number.
Dataset load_dataset(const std::string& path, const DatasetSchema& schema);

// Schema inferred from the header: `response_name` must be one of the
// columns; the remaining columns become features in header order.
Dataset load_dataset(const std::string& path, const std::string& response_name = "time_seconds");

void save_dataset(const Dataset& ds, const std::string& path);

// Uniform random train/test split without replacement. Train size is
// max(1, floor(fraction * n)); test is the complement. Deterministic per
// seed; row order within each part follows the original dataset order.
std::pair<Dataset, Dataset> split_uniform(const Dataset& ds, double fraction,
                                          std::uint64_t seed);

// Schema presets matching the two applications' modeling vectors.
DatasetSchema stencil_schema(bool blocking, bool unroll, bool threads);
DatasetSchema fmm_schema(bool threads = true);

}  // namespace perfweld
