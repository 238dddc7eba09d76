#include <cmath>
#include <limits>

#include "anemiakit/learners.hpp"

namespace anemiakit {

namespace {
// Encoded cells are integer codes; SMOTE output is fractional and is read as
// the nearest level.
int level_of(double v) { return static_cast<int>(std::lround(v)); }
}  // namespace

ojson NbModel::parameter_defaults() const { return {{"alpha", 1.0}}; }

void NbModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) {
  alpha_ = hp_.number("alpha");
  if (!(alpha_ >= 0) || !std::isfinite(alpha_)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be a finite value >= 0");
  }
  const auto d = static_cast<std::size_t>(X.cols());
  if (!options.cardinalities.empty()) {
    if (options.cardinalities.size() != d) {
      throw Error(ErrorCode::kInvalidArgument, "cardinalities do not match column count");
    }
    cards_ = options.cardinalities;
  } else {
    cards_.assign(d, 1);
    for (std::size_t j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        cards_[j] = std::max(cards_[j], level_of(X(i, static_cast<Eigen::Index>(j))) + 1);
      }
    }
  }
  class_counts_.setZero();
  for (int v : y) class_counts_(v) += 1;
  priors_ = class_counts_ / static_cast<double>(y.size());

  counts_.assign(d, Eigen::MatrixXd());
  for (std::size_t j = 0; j < d; ++j) {
    counts_[j] = Eigen::MatrixXd::Zero(2, cards_[j]);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const int v = level_of(X(i, static_cast<Eigen::Index>(j)));
      if (v < 0 || v >= cards_[j]) continue;
      counts_[j](y[static_cast<std::size_t>(i)], v) += 1;
    }
  }
}

double NbModel::conditional(int column, int klass, int level) const {
  require_fitted();
  const auto& c = counts_[static_cast<std::size_t>(column)];
  const double total = c.row(klass).sum();
  const double levels = c.cols();
  const double count = (level >= 0 && level < c.cols()) ? c(klass, level) : 0.0;
  const double denom = total + alpha_ * levels;
  return denom > 0 ? (count + alpha_) / denom : 0.0;
}

Eigen::VectorXd NbModel::predict_proba(const Eigen::MatrixXd& X) const {
  check_input(X);
  Eigen::VectorXd out(X.rows());
  const double ninf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double lp[2];
    for (int k = 0; k < 2; ++k) {
      lp[k] = priors_(k) > 0 ? std::log(priors_(k)) : ninf;
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double c = conditional(static_cast<int>(j), k, level_of(X(i, j)));
        lp[k] += c > 0 ? std::log(c) : ninf;
      }
    }
    if (lp[0] == ninf && lp[1] == ninf) {
      out(i) = priors_(1);
    } else {
      // Two-class softmax of log posteriors.
      out(i) = sigmoid(lp[1] - lp[0]);
      if (lp[0] == ninf) out(i) = 1.0;
      if (lp[1] == ninf) out(i) = 0.0;
    }
  }
  return out;
}

ojson NbModel::parameters() const {
  ojson tables = ojson::array();
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    ojson t = ojson::array();
    for (int k = 0; k < 2; ++k) {
      std::vector<double> row;
      for (int v = 0; v < cards_[j]; ++v) row.push_back(conditional(static_cast<int>(j), k, v));
      t.push_back(row);
    }
    tables.push_back(std::move(t));
  }
  return {{"priors", {priors_(0), priors_(1)}}, {"alpha", alpha_}, {"conditionals", std::move(tables)}};
}

}  // namespace anemiakit
