#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "anemiakit/common.hpp"
#include "json.hpp"

namespace anemiakit {

// ---------------------------------------------------------------------------
// Outcome and derived-variable rules
// ---------------------------------------------------------------------------

/// Hemoglobin cut-offs in g/dL for children 6-59 months.
struct AnemiaThresholds {
  double no_anemia_min = 11.0;
  double mild_min = 10.0;
  double moderate_min = 7.0;

  void validate() const;
};

/// 1 iff hb < no_anemia_min. Any severity counts as anemic.
int label_from_hemoglobin(double hb_g_dl, const AnemiaThresholds& t = {});

enum class NutritionStatus { kNourished, kMalnourished };

/// Nourished iff every z-score lies in the closed band [-2, +2]. Non-finite
/// entries are treated as missing; at least one finite score is required.
NutritionStatus derive_nutrition_status(std::span<const double> z_scores);

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class FeatureKind { kOrdinal, kOneHot, kBinary };
enum class ImputeRule { kNone, kMedian, kMode };
enum class LabelKind { kBinary, kHemoglobin };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(ImputeRule rule);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kBinary;
  std::vector<std::string> levels;
  std::string reference_level;
  ImputeRule impute = ImputeRule::kNone;
  std::optional<double> cap;
  // When non-empty the cell is not read from the CSV but derived from these
  // anthropometric z-score columns (levels must be nourished/malnourished).
  std::vector<std::string> nutrition_z_columns;

  void validate() const;
  /// -1 when the label is not a level.
  int level_index(std::string_view label) const;
  int reference_index() const;
  int cardinality() const { return static_cast<int>(levels.size()); }
};

struct DatasetSchema {
  std::vector<FeatureSpec> features;
  std::string label_name;
  LabelKind label_kind = LabelKind::kBinary;
  std::string positive_label = "1";
  std::string negative_label = "0";
  AnemiaThresholds thresholds;
  std::vector<std::string> missing_tokens{"", "NA", "."};
  std::vector<std::string> forced_includes;

  void validate() const;
  int feature_index(std::string_view name) const;
  bool is_missing(std::string_view cell) const;

  static DatasetSchema from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;
};

DatasetSchema load_schema(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Imputation
// ---------------------------------------------------------------------------

using RawColumn = std::vector<std::optional<std::string>>;

/// Applies the cap (numeric-coded levels only), then fills missing cells by
/// the lower-middle median (numeric value or level rank) or the mode (ties go
/// to the earlier level). Observed cells are returned in canonical form.
std::vector<std::string> impute_column(const RawColumn& column,
                                       const FeatureSpec& spec);

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Immutable table of level codes (index into FeatureSpec::levels) with a
/// binary outcome per row (anemic = 1).
class Dataset {
 public:
  Dataset(std::shared_ptr<const DatasetSchema> schema,
          std::vector<std::vector<int>> columns, Labels labels);

  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_features() const { return columns_.size(); }
  int code(std::size_t row, std::size_t feature) const {
    return columns_[feature][row];
  }
  const std::vector<int>& column(std::size_t feature) const {
    return columns_[feature];
  }
  const std::string& category(std::size_t row, std::size_t feature) const;
  const Labels& labels() const { return labels_; }
  const DatasetSchema& schema() const { return *schema_; }
  std::shared_ptr<const DatasetSchema> schema_ptr() const { return schema_; }

  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  std::shared_ptr<const DatasetSchema> schema_;
  std::vector<std::vector<int>> columns_;
  Labels labels_;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped_missing_label = 0;
  // Rows with a missing cell in a feature whose impute rule is `none`.
  std::size_t rows_dropped_missing_feature = 0;
  std::size_t rows_kept = 0;
};

Dataset read_dataset_csv(std::istream& in,
                         std::shared_ptr<const DatasetSchema> schema,
                         LoadReport* report = nullptr);
Dataset load_dataset_csv(const std::filesystem::path& path,
                         std::shared_ptr<const DatasetSchema> schema,
                         LoadReport* report = nullptr);

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerant.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Provenance of one encoded column. `level` is the indicated level for
/// indicator columns and -1 for a rank column.
struct ColumnOrigin {
  int feature = 0;
  int level = -1;
  std::string name;
};

struct EncodedMatrix {
  Eigen::MatrixXd values;
  std::vector<ColumnOrigin> column_map;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  /// Distinct integer values each column may take (2 for indicators).
  std::vector<int> cardinalities(const DatasetSchema& schema) const;
};

/// Model encoding: ordinal -> zero-based rank, binary -> {0,1} with the
/// reference level at 0, one-hot -> one indicator per non-reference level.
/// `features` selects schema features by index (all when empty), emitted in
/// schema order.
EncodedMatrix encode(const Dataset& ds, std::span<const int> features = {});

/// Treatment coding of every feature (one indicator per non-reference level,
/// ordinal features included). Used for odds-ratio regressions.
EncodedMatrix encode_treatment(const Dataset& ds,
                               std::span<const int> features = {});

/// Inverse of `encode` for one row: level code per encoded feature, in the
/// order features first appear in the column map.
std::vector<int> decode_row(const EncodedMatrix& m, std::size_t row,
                            const DatasetSchema& schema);

void write_encoded_csv(std::ostream& out, const EncodedMatrix& m,
                       const Labels& labels);

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct SplitPlan {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
};

/// Per-class test allocation floor(count * frac) topped up by largest
/// remainder so the total equals round(n * frac).
SplitPlan stratified_split(const Labels& labels, double test_frac,
                           std::uint64_t seed);

}  // namespace anemiakit
