#include <cmath>

#include "anemiakit/learners.hpp"

namespace anemiakit {

ojson LdaModel::parameter_defaults() const { return {{"epsilon", 1e-4}}; }

void LdaModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions&) {
  const double eps = hp_.number("epsilon");
  if (!(eps >= 0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be a finite value >= 0");
  }
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n <= d) throw Error(ErrorCode::kInvalidArgument, "LDA needs more rows than columns");

  Eigen::VectorXd mu[2] = {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  double count[2] = {0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = y[static_cast<std::size_t>(i)];
    mu[k] += X.row(i).transpose();
    count[k] += 1;
  }
  for (int k = 0; k < 2; ++k) mu[k] /= count[k];
  const Eigen::VectorXd mean = (count[0] * mu[0] + count[1] * mu[1]) / static_cast<double>(n);

  Eigen::MatrixXd centered(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered.row(i) = X.row(i) - mu[y[static_cast<std::size_t>(i)]].transpose();
  }
  s_w_ = centered.transpose() * centered;
  s_w_.diagonal().array() += eps;
  s_b_ = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd dk = mu[k] - mean;
    s_b_ += count[k] * dk * dk.transpose();
  }

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s_w_);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-12)) {
    throw Error(ErrorCode::kDegenerate,
                "within-class scatter is singular; use epsilon > 0");
  }
  const Eigen::VectorXd diff = mu[1] - mu[0];
  // Two-class closed form of S_B w = lambda S_W w.
  const Eigen::VectorXd v = ldlt.solve(diff);
  const double norm = v.norm();
  direction_ = norm > 0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Zero(d);
  const double denom = v.dot(s_w_ * v);
  eigenvalue_ = denom > 0 ? v.dot(s_b_ * v) / denom : 0.0;

  // Gaussian discriminant with shared (maximum-likelihood) covariance S_W / n.
  weights_ = static_cast<double>(n) * v;
  offset_ = -0.5 * weights_.dot(mu[1] + mu[0]) + std::log(count[1] / count[0]);
}

Eigen::VectorXd LdaModel::decision_function(const Eigen::MatrixXd& X) const {
  check_input(X);
  return (X * weights_).array() + offset_;
}

Eigen::VectorXd LdaModel::predict_proba(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd z = decision_function(X);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
  return z;
}

ojson LdaModel::parameters() const {
  return {{"direction", std::vector<double>(direction_.data(), direction_.data() + direction_.size())},
          {"eigenvalue", eigenvalue_},
          {"weights", std::vector<double>(weights_.data(), weights_.data() + weights_.size())},
          {"offset", offset_}};
}

}  // namespace anemiakit
