#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "anemiakit/balance.hpp"
#include "anemiakit/common.hpp"
#include "anemiakit/learners.hpp"

namespace anemiakit {

// ---------------------------------------------------------------------------
// Point metrics

struct ConfusionMatrix {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;
  long n() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(const Labels& truth, const Labels& predicted);

struct BasicMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Zero denominators; the value is reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

BasicMetrics basic_metrics(const ConfusionMatrix& cm);

/// (p0 - pe) / (1 - pe). Throws kDegenerate when pe == 1.
double cohens_kappa(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Ranking metrics. Scores are ordered descending, ties by ascending row index.

/// Step sum of P(k) [R(k) - R(k-1)]. Throws kDegenerate with no positives.
double average_precision(std::span<const double> scores, const Labels& truth);

/// Midrank AUC; tied pairs get half credit. Throws kDegenerate unless both
/// classes are present.
double roc_auc(std::span<const double> scores, const Labels& truth);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};
struct PrPoint {
  double threshold;
  double recall;
  double precision;
};

/// One point per distinct score (descending), preceded by (0, 0) at an
/// infinite threshold; ends at (1, 1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, const Labels& truth);
/// One point per distinct score (descending).
std::vector<PrPoint> pr_curve(std::span<const double> scores, const Labels& truth);

// ---------------------------------------------------------------------------
// Report

inline constexpr std::array<std::string_view, 8> kMetricRowNames = {
    "Accuracy", "Precision",     "Recall",         "F1 Score",
    "Average Precision", "AUC", "Cohen's Kappa", "Train Set F1 Score"};

struct MetricReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double average_precision = 0.0;
  double auc = 0.0;
  double cohens_kappa = 0.0;
  double train_f1 = 0.0;
  ConfusionMatrix confusion;
  // Names of metrics that were undefined on this data (value NaN, or 0 for
  // precision/recall by convention).
  std::vector<std::string> flags;
  std::vector<RocPoint> roc;
  std::vector<PrPoint> pr;

  /// Values in kMetricRowNames order.
  std::array<double, 8> row_values() const;
  ojson to_json() const;
  static MetricReport from_json(const ojson& doc);
};

/// Scores `model` on the test split; train_f1 is measured on the given
/// training rows. Undefined metrics become flags, never exceptions.
MetricReport evaluate(const ClassifierModel& model, const Eigen::MatrixXd& X_test,
                      const Labels& y_test, const Eigen::MatrixXd& X_train, const Labels& y_train);

/// Same, from precomputed probabilities.
MetricReport evaluate_scores(const Eigen::VectorXd& test_proba, const Labels& y_test,
                             const Eigen::VectorXd& train_proba, const Labels& y_train);

// ---------------------------------------------------------------------------
// Cross-validation

struct CvPlan {
  int n_folds = 5;
  int n_repeats = 3;
  std::uint64_t seed = 0;
  // fold_of[repeat][row]
  std::vector<std::vector<int>> fold_of;

  std::size_t n_rows() const { return fold_of.empty() ? 0 : fold_of[0].size(); }
  std::vector<std::size_t> validation(int repeat, int fold) const;
  std::vector<std::size_t> training(int repeat, int fold) const;
};

/// Stratified, shuffled fold assignment per repeat. Throws kInfeasible when
/// a class has fewer rows than folds.
CvPlan make_cv_plan(const Labels& labels, int n_folds = 5, int n_repeats = 3, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Grid search

struct GridSearchOptions {
  SmoteConfig smote;
  bool use_smote = true;
  int jobs = 1;
  std::uint64_t seed = 0;
  std::vector<int> cardinalities;
};

struct CandidateResult {
  HyperParams hp;
  // Validation F1 per (repeat, fold), repeat-major.
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  bool valid = true;
  std::string error;
};

/// Tag checks made on every (candidate, fold) evaluation.
struct LeakageAudit {
  std::size_t evaluations = 0;
  std::size_t validation_rows_scored = 0;
  std::size_t synthetic_rows_in_validation = 0;
  std::size_t validation_rows_in_training = 0;
  std::size_t validation_rows_as_smote_parents = 0;
  bool clean() const {
    return synthetic_rows_in_validation == 0 && validation_rows_in_training == 0 &&
           validation_rows_as_smote_parents == 0;
  }
};

struct GridSearchResult {
  std::vector<CandidateResult> candidates;
  std::size_t best_index = 0;
  HyperParams best_hp;
  std::unique_ptr<ClassifierModel> model;
  LeakageAudit audit;
};

/// Every candidate is scored by validation F1 on every (repeat, fold), with
/// SMOTE applied to the training part only. The best mean F1 wins (ties go to
/// grid order) and is refit on the SMOTE-resampled full training data.
/// Throws kSearchFailure when every candidate failed.
GridSearchResult grid_search(LearnerId learner, const std::vector<HyperParams>& grid,
                             const CvPlan& plan, const Eigen::MatrixXd& X, const Labels& y,
                             const GridSearchOptions& options);

}  // namespace anemiakit
