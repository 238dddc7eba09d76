#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anemiakit/common.hpp"
#include "json.hpp"

namespace anemiakit {

using ojson = nlohmann::ordered_json;

enum class LearnerId { kLR, kKNN, kDT, kRF, kXGB, kSVM, kNB, kLDA, kDNN };

/// Report names, in the column order used by the performance table.
inline constexpr LearnerId kAllLearners[] = {
    LearnerId::kLR,  LearnerId::kKNN, LearnerId::kDT,  LearnerId::kRF, LearnerId::kXGB,
    LearnerId::kSVM, LearnerId::kNB,  LearnerId::kLDA, LearnerId::kDNN};

std::string_view learner_name(LearnerId id);
std::optional<LearnerId> parse_learner(std::string_view name);

/// Name -> value map. Keys are checked against the learner's declared
/// parameters when a model is fitted; unknown keys are rejected.
class HyperParams {
 public:
  HyperParams() : values_(ojson::object()) {}
  explicit HyperParams(ojson values);

  bool has(const std::string& key) const { return values_.contains(key); }
  bool is_null(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<int> int_list(const std::string& key) const;

  HyperParams with(const std::string& key, ojson value) const;
  const ojson& values() const { return values_; }
  std::string to_string() const { return values_.dump(); }

  friend bool operator==(const HyperParams& a, const HyperParams& b) {
    return a.values_ == b.values_;
  }

 private:
  const ojson& at(const std::string& key) const;
  ojson values_;
};

struct FitOptions {
  std::uint64_t seed = 0;
  // Number of integer levels per column (used by categorical naive Bayes).
  // Inferred from the training data when empty.
  std::vector<int> cardinalities;
  int jobs = 1;
};

/// Fit / probability contract shared by all learners. predict() thresholds
/// predict_proba() at 0.5 for every learner.
class ClassifierModel {
 public:
  virtual ~ClassifierModel() = default;

  virtual LearnerId id() const = 0;
  /// Declared parameters with their defaults, in declaration order.
  virtual ojson parameter_defaults() const = 0;

  void fit(const Eigen::MatrixXd& X, const Labels& y, const HyperParams& hp = {},
           const FitOptions& options = {});
  virtual Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const = 0;
  Labels predict(const Eigen::MatrixXd& X) const;

  bool fitted() const { return fitted_; }
  const HyperParams& hyperparams() const { return hp_; }

  /// Versioned audit document: learner, hyperparameters, parameters.
  ojson to_json() const;

 protected:
  virtual void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) = 0;
  virtual ojson parameters() const = 0;
  void require_fitted() const;
  void check_input(const Eigen::MatrixXd& X) const;

  HyperParams hp_;
  Eigen::Index n_columns_ = 0;

 private:
  bool fitted_ = false;
};

std::unique_ptr<ClassifierModel> make_learner(LearnerId id);

/// Default search space as param -> list of values, in declaration order.
ojson default_grid_spec(LearnerId id, std::size_t n_columns);
/// Cartesian expansion of a grid spec; the last key varies fastest.
std::vector<HyperParams> expand_grid(const ojson& grid_spec);

inline constexpr int kModelFormatVersion = 1;

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  // Inverse of the penalized observed information, intercept first.
  Eigen::MatrixXd covariance;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Thrown when the likelihood has no finite maximizer (complete or
/// quasi-complete separation). `column` is the coefficient that diverged.
class SeparationError : public Error {
 public:
  SeparationError(int column, const std::string& message)
      : Error(ErrorCode::kDiverged, message), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

/// Newton/IRLS on NLL + (l2/2)||w||^2 with an unpenalized intercept. Stops at
/// gradient 2-norm <= tol, or when the Newton decrement falls to the rounding
/// level of the objective; fails after max_iter iterations.
LogisticFit fit_logistic_irls(const Eigen::MatrixXd& X, const Labels& y, double l2,
                              int max_iter = 100, double tol = 1e-8);

class LogisticModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kLR; }
  ojson parameter_defaults() const override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd decision_function(const Eigen::MatrixXd& X) const;

  const Eigen::VectorXd& coefficients() const { return fit_.coefficients; }
  double intercept() const { return fit_.intercept; }
  const LogisticFit& fit_result() const { return fit_; }

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  LogisticFit fit_;
};

// ---------------------------------------------------------------------------
// k-nearest neighbours

class KnnModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kKNN; }
  ojson parameter_defaults() const override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  int k_ = 5;
  Eigen::MatrixXd train_;
  Labels labels_;
};

// ---------------------------------------------------------------------------
// CART tree and random forest

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;    // training samples reaching the node
  double positive = 0.0;  // of which class 1
  double proba() const { return weight > 0 ? positive / weight : 0.5; }
};

struct TreeGrowParams {
  int max_depth = -1;  // -1: unlimited
  double min_samples_leaf = 1;
  int max_features = 0;  // 0: all columns at every split
};

/// Greedy CART with Gini impurity. `weights` holds per-row sample counts
/// (bootstrap multiplicities); rows with weight 0 are ignored.
class CartTree {
 public:
  void grow(const Eigen::MatrixXd& X, const Labels& y, std::span<const double> weights,
            const TreeGrowParams& params, std::uint64_t seed);

  int leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  /// Total weighted Gini decrease per column (unnormalized).
  const Eigen::VectorXd& impurity_decrease() const { return importance_; }
  int depth() const;
  ojson to_json() const;

 private:
  friend class ForestModel;
  std::vector<TreeNode> nodes_;
  Eigen::VectorXd importance_;
};

class TreeModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kDT; }
  ojson parameter_defaults() const override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  const CartTree& tree() const { return tree_; }

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  CartTree tree_;
};

class ForestModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kRF; }
  ojson parameter_defaults() const override;
  /// Mean of per-tree leaf frequencies.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  /// Mode of the per-tree hard votes (ties -> 1).
  Labels vote(const Eigen::MatrixXd& X) const;
  /// Mean over trees of each tree's normalized Gini importance.
  Eigen::VectorXd feature_importances() const;
  const std::vector<CartTree>& trees() const { return trees_; }

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  std::vector<CartTree> trees_;
};

/// Majority vote over 0/1 votes; ties go to 1.
int mode_vote(std::span<const int> votes);

// ---------------------------------------------------------------------------
// Gradient-boosted trees (second-order, logistic loss)

struct GbtNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_weight = 0.0;
};

class GbtModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kXGB; }
  ojson parameter_defaults() const override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd margin(const Eigen::MatrixXd& X) const;

  /// Initial margin (log-odds); the base_score hyperparameter is a probability.
  double base_score() const { return base_score_; }
  const std::vector<std::vector<GbtNode>>& trees() const { return trees_; }
  /// Mean training logistic loss before round 1 and after every round.
  const std::vector<double>& training_loss() const { return loss_history_; }

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  double base_score_ = 0.0;
  double eta_ = 0.3;
  std::vector<std::vector<GbtNode>> trees_;
  std::vector<double> loss_history_;
};

// ---------------------------------------------------------------------------
// Support vector machine

enum class KernelKind { kLinear, kRbf };

class SvmModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kSVM; }
  ojson parameter_defaults() const override;
  /// Platt sigmoid of the decision value.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd decision_function(const Eigen::MatrixXd& X) const;

  /// alpha_i for every training row (0 for non-support vectors).
  const Eigen::VectorXd& alphas() const { return alpha_full_; }
  double bias() const { return bias_; }
  double cost() const { return cost_; }
  bool converged() const { return converged_; }
  int iterations() const { return iterations_; }
  /// Primal weights (linear kernel only).
  std::optional<Eigen::VectorXd> primal_weights() const;
  double kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                const Eigen::Ref<const Eigen::RowVectorXd>& b) const;

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  KernelKind kernel_ = KernelKind::kRbf;
  double gamma_ = 1.0;
  double cost_ = 1.0;
  Eigen::MatrixXd support_;
  Eigen::VectorXd coef_;  // alpha_i * y_i per support vector
  Eigen::VectorXd alpha_full_;
  double bias_ = 0.0;
  double platt_a_ = -1.0;
  double platt_b_ = 0.0;
  bool converged_ = true;
  int iterations_ = 0;
};

/// Platt (A, B) such that P(y=1|f) = 1 / (1 + exp(A f + B)), using the
/// Newton method with backtracking of Lin, Lin and Weng.
std::pair<double, double> fit_platt_sigmoid(std::span<const double> decision,
                                            const Labels& y);

// ---------------------------------------------------------------------------
// Categorical naive Bayes

class NbModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kNB; }
  ojson parameter_defaults() const override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;

  const Eigen::Vector2d& priors() const { return priors_; }
  /// P(x_j = v | C_k) for column j, class k, level v (v < cardinality).
  double conditional(int column, int klass, int level) const;
  int cardinality(int column) const { return cards_[static_cast<std::size_t>(column)]; }

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  double alpha_ = 1.0;
  Eigen::Vector2d priors_{0.5, 0.5};
  Eigen::Vector2d class_counts_{0, 0};
  std::vector<int> cards_;
  // counts_[j](k, v)
  std::vector<Eigen::MatrixXd> counts_;
};

// ---------------------------------------------------------------------------
// Linear discriminant analysis

class LdaModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kLDA; }
  ojson parameter_defaults() const override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd decision_function(const Eigen::MatrixXd& X) const;

  /// Unit-norm Fisher direction solving S_B w = lambda S_W w.
  const Eigen::VectorXd& direction() const { return direction_; }
  double eigenvalue() const { return eigenvalue_; }
  const Eigen::MatrixXd& within_scatter() const { return s_w_; }
  const Eigen::MatrixXd& between_scatter() const { return s_b_; }

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  Eigen::MatrixXd s_w_, s_b_;
  Eigen::VectorXd direction_;
  double eigenvalue_ = 0.0;
  Eigen::VectorXd weights_;  // discriminant coefficients
  double offset_ = 0.0;
};

// ---------------------------------------------------------------------------
// Multilayer perceptron

struct MlpLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

class MlpModel final : public ClassifierModel {
 public:
  LearnerId id() const override { return LearnerId::kDNN; }
  ojson parameter_defaults() const override;
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;

  /// ReLU hidden layers, sigmoid output. Used by fit and by gradient checks.
  static Eigen::VectorXd forward(const std::vector<MlpLayer>& layers,
                                 const Eigen::MatrixXd& X);
  /// Mean binary cross-entropy and its gradient, flattened layer by layer
  /// (weights column-major, then bias).
  static double loss_and_gradient(const std::vector<MlpLayer>& layers,
                                  const Eigen::MatrixXd& X, const Labels& y,
                                  Eigen::VectorXd* gradient);
  static std::vector<MlpLayer> init_layers(int inputs, const std::vector<int>& hidden,
                                           std::uint64_t seed);
  static Eigen::VectorXd flatten(const std::vector<MlpLayer>& layers);
  static void unflatten(const Eigen::VectorXd& flat, std::vector<MlpLayer>& layers);

  const std::vector<MlpLayer>& layers() const { return layers_; }
  const std::vector<double>& training_loss() const { return loss_history_; }

 protected:
  void do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) override;
  ojson parameters() const override;

 private:
  std::vector<MlpLayer> layers_;
  std::vector<double> loss_history_;
};

}  // namespace anemiakit
