#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "anemiakit/common.hpp"
#include "anemiakit/ingest.hpp"

namespace anemiakit {

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
  bool degenerate = false;
};

/// Pearson chi-square (no continuity correction) on a levels x classes count
/// table. Rows with a zero marginal are unobserved levels and are dropped;
/// throws kDegenerate when fewer than two rows remain or a class column is
/// empty.
ChiSquareResult chi_square_test(const Eigen::MatrixXd& table);

/// Plug-in mutual information in nats of a count table.
double mutual_information(const Eigen::MatrixXd& table);

/// Level x label count table of one schema feature.
Eigen::MatrixXd contingency_table(const Dataset& ds, int feature);

/// Per-feature chi-square; degenerate tables score 0 and are flagged.
std::vector<ChiSquareResult> chi_square_scores(const Dataset& ds);
std::vector<double> mutual_information_scores(const Dataset& ds);

/// Pearson correlation of a numeric column with 0/1 labels. Throws
/// kDegenerate when either side is constant.
double point_biserial(std::span<const double> x, const Labels& y);

// ---------------------------------------------------------------------------
// Boruta

struct BorutaConfig {
  int max_iterations = 100;
  int n_trees = 100;
  double significance = 0.05;
  std::uint64_t seed = 0;
  // Depth cap for the forests; -1 grows full trees.
  int max_depth = 7;
  int jobs = 1;
  void validate() const;
};

enum class BorutaDecision { kTentative, kConfirmed, kRejected };
std::string_view to_string(BorutaDecision d);

struct BorutaResult {
  std::vector<BorutaDecision> decisions;
  std::vector<int> hits;
  // Iterations each column took part in (stops growing once decided).
  std::vector<int> trials;
  // Mean importance over the iterations each column took part in.
  std::vector<double> mean_importance;
  int iterations = 0;
};

BorutaResult boruta(const Eigen::MatrixXd& X, const Labels& y, const BorutaConfig& cfg);

// ---------------------------------------------------------------------------
// Consensus

enum class SelectionMethod { kChiSquare, kMutualInfo, kPointBiserial, kBoruta };
inline constexpr SelectionMethod kAllMethods[] = {
    SelectionMethod::kChiSquare, SelectionMethod::kMutualInfo,
    SelectionMethod::kPointBiserial, SelectionMethod::kBoruta};
std::string_view to_string(SelectionMethod m);

struct MethodScore {
  std::string feature;
  SelectionMethod method = SelectionMethod::kChiSquare;
  double raw_score = 0.0;
  double normalized = 0.0;
  bool selected = false;
  // Score undefined for this feature (degenerate table, constant column).
  bool degenerate = false;
};

struct FeatureScoreTable {
  std::vector<std::string> features;
  std::vector<MethodScore> scores;  // feature-major, method order as kAllMethods
  std::vector<int> consensus_count;
  std::vector<std::string> final_set;

  const MethodScore& score(std::size_t feature, SelectionMethod m) const;
};

/// `scores` holds one entry per (feature, method) with raw_score and, for
/// Boruta, `selected` already set. Filter methods select the top_k features
/// by raw score (|r| for point-biserial; ties go to schema order), degenerate
/// scores excluded. Normalization is max-scaling per method.
FeatureScoreTable consensus(std::vector<std::string> features, std::vector<MethodScore> scores,
                            int top_k, int min_methods,
                            const std::vector<std::string>& forced_includes);

struct SelectionConfig {
  int top_k = 15;
  int min_methods = 3;
  std::vector<std::string> forced_includes;
  BorutaConfig boruta;
};

/// Runs all four methods on `ds` and forms the consensus.
FeatureScoreTable score_features(const Dataset& ds, const SelectionConfig& cfg);

/// Columns: feature, method, raw_score, normalized, selected, consensus_count.
void write_feature_scores_csv(std::ostream& out, const FeatureScoreTable& table);

}  // namespace anemiakit
