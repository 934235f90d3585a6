#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pfr/errors.hpp"

namespace pfr {

enum class ColumnKind { numeric, categorical };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> categories;  // categorical only, sorted
};

// A sensitive attribute: discrete classes with one designated privileged value.
struct SensitiveSpec {
  std::string column;
  std::string privileged_value;
  std::vector<std::string> classes;  // sorted distinct values observed in the data

  int class_index(std::string_view value) const;
};

// One feature column in columnar storage. Numeric columns fill `numeric`,
// categorical columns fill `codes` with indices into schema.categories.
struct FeatureColumn {
  ColumnSchema schema;
  std::vector<double> numeric;
  std::vector<int> codes;
};

struct SensitiveColumn {
  SensitiveSpec spec;
  std::vector<int> codes;  // indices into spec.classes
  int privileged_code = 0;

  // 1 where the row holds the privileged value, else 0.
  std::vector<int> privileged_indicator() const;
  SensitiveColumn subset(const std::vector<std::size_t>& rows) const;
};

// Validated tabular data: features X, binary target Y, sensitive columns S.
// X and S are disjoint by construction.
struct TabularDataset {
  std::vector<FeatureColumn> features;
  std::vector<int> target;
  std::vector<SensitiveColumn> sensitive;

  std::size_t n_rows() const { return target.size(); }
  const SensitiveColumn& sensitive_column(std::string_view name) const;
};

struct DatasetConfig {
  std::string path;
  std::string target_column;
  std::string positive_label;  // empty: target values must already be 0/1
  struct SensitiveEntry {
    std::string column;
    std::string privileged_value;
  };
  std::vector<SensitiveEntry> sensitive;
  std::vector<std::string> numeric_columns;      // kind overrides
  std::vector<std::string> categorical_columns;  // kind overrides
  std::vector<std::string> ignore_columns;
  bool strict_categories = true;

  static DatasetConfig from_json_file(const std::string& config_path);
  static DatasetConfig from_json_text(const std::string& text);
};

struct EncodedColumn {
  std::string id;                               // "age" or "workclass=Private"
  std::string source_attribute;                 // original attribute name
  std::optional<std::string> source_category;   // set for one-hot indicator columns

  bool operator==(const EncodedColumn& o) const = default;
};

struct ScalingParams {
  double min = 0.0;
  double max = 0.0;
};

// Fully numeric design matrix with column provenance, row-major storage.
struct EncodedMatrix {
  std::vector<EncodedColumn> columns;
  std::vector<ScalingParams> scaling;  // empty until min_max_scale
  std::size_t n_rows = 0;
  std::vector<double> values;  // n_rows * columns.size(), row-major

  std::size_t n_cols() const { return columns.size(); }
  double at(std::size_t row, std::size_t col) const { return values[row * columns.size() + col]; }
  double& at(std::size_t row, std::size_t col) { return values[row * columns.size() + col]; }
  const double* row(std::size_t r) const { return values.data() + r * columns.size(); }
  bool scaled() const { return !scaling.empty(); }

  std::optional<std::size_t> column_index(std::string_view id) const;
  std::vector<std::string> column_ids() const;
  EncodedMatrix select_rows(const std::vector<std::size_t>& rows) const;
};

TabularDataset load_csv(const std::string& path, const DatasetConfig& config);

// Expands categorical columns to one indicator column per category; numeric
// columns pass through. No scaling applied.
EncodedMatrix one_hot_encode(const TabularDataset& dataset);

// Encodes against a reference column layout (for instance the training data's).
// A category with no matching indicator column raises a validation error in
// strict mode and silently yields all-zero indicators otherwise. Reference
// columns absent from the dataset raise a column-mismatch error either way.
EncodedMatrix encode_with_columns(const TabularDataset& dataset,
                                  const std::vector<EncodedColumn>& columns,
                                  bool strict_categories = true);

// Per-column (x - min) / (max - min) fit on the given rows; constant columns
// map to all zeros. Fit parameters are stored in the result for reuse.
EncodedMatrix min_max_scale(const EncodedMatrix& m);

// Applies previously fit parameters to new rows. Values outside the fit range
// map outside [0, 1]; that is not an error.
EncodedMatrix min_max_apply(const EncodedMatrix& m, const std::vector<ScalingParams>& params);

// Duplicates minority-class rows with replacement until class counts equalize,
// then shuffles. Pure function of (inputs, seed).
std::pair<EncodedMatrix, std::vector<int>> oversample_minority(const EncodedMatrix& m,
                                                               const std::vector<int>& labels,
                                                               std::uint64_t seed);

struct SplitResult {
  EncodedMatrix train;
  EncodedMatrix eval;
  std::vector<int> train_labels;
  std::vector<int> eval_labels;
  std::vector<std::size_t> train_rows;  // original row indices
  std::vector<std::size_t> eval_rows;
};

// Disjoint stratified partition; `fraction` of each label class goes to train.
SplitResult split(const EncodedMatrix& m, const std::vector<int>& labels, double fraction,
                  std::uint64_t seed);

// Returns the matrix without the named columns. Unknown ids are an error.
EncodedMatrix drop_columns(const EncodedMatrix& m, const std::vector<std::string>& ids);

}  // namespace pfr
