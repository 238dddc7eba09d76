#include <cmath>

#include "anemiakit/learners.hpp"

namespace anemiakit {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

double penalized_nll(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta, double l2) {
  const Eigen::VectorXd eta = Z * beta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) nll += softplus(eta(i)) - y(i) * eta(i);
  return nll + 0.5 * l2 * beta.tail(beta.size() - 1).squaredNorm();
}

Eigen::MatrixXd hessian(const Eigen::MatrixXd& Z, const Eigen::VectorXd& p, double l2) {
  const Eigen::VectorXd w = p.array() * (1.0 - p.array());
  Eigen::MatrixXd H = Z.transpose() * w.asDiagonal() * Z;
  for (Eigen::Index j = 1; j < H.rows(); ++j) H(j, j) += l2;
  return H;
}

Eigen::VectorXd probabilities(const Eigen::MatrixXd& Z, const Eigen::VectorXd& beta) {
  Eigen::VectorXd p = Z * beta;
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = sigmoid(p(i));
  return p;
}

int largest_coefficient(const Eigen::VectorXd& beta) {
  Eigen::Index idx = 0;
  beta.tail(beta.size() - 1).cwiseAbs().maxCoeff(&idx);
  return static_cast<int>(idx);
}

constexpr double kSeparationBound = 30.0;
constexpr double kConvergedBound = 15.0;

}  // namespace

LogisticFit fit_logistic_irls(const Eigen::MatrixXd& X, const Labels& labels, double l2,
                              int max_iter, double tol) {
  if (l2 < 0 || !std::isfinite(l2)) {
    throw Error(ErrorCode::kInvalidArgument, "l2 must be a finite value >= 0");
  }
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (static_cast<std::size_t>(n) != labels.size() || n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "row count and label count differ");
  }
  Eigen::MatrixXd Z(n, d + 1);
  Z.col(0).setOnes();
  Z.rightCols(d) = X;
  Eigen::VectorXd y(n);
  double mean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = labels[static_cast<std::size_t>(i)];
    mean += y(i);
  }
  mean /= static_cast<double>(n);
  if (mean <= 0.0 || mean >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "both classes must be present");
  }

  if (l2 == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < d + 1) {
      throw Error(ErrorCode::kDegenerate,
                  "design matrix is rank-deficient (rank " + std::to_string(qr.rank()) +
                      " of " + std::to_string(d + 1) + " columns)");
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  beta(0) = std::log(mean / (1.0 - mean));
  double objective = penalized_nll(Z, y, beta, l2);

  LogisticFit fit;
  bool converged = false;
  for (int iter = 0; iter <= max_iter; ++iter) {
    const Eigen::VectorXd p = probabilities(Z, beta);
    Eigen::VectorXd g = Z.transpose() * (p - y);
    g.tail(d) += l2 * beta.tail(d);
    fit.gradient_norm = g.norm();
    fit.iterations = iter;
    if (fit.gradient_norm <= tol) {
      converged = true;
      break;
    }
    if (iter == max_iter) break;

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian(Z, p, l2));
    Eigen::VectorXd step = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      if (l2 == 0.0) {
        throw SeparationError(largest_coefficient(beta),
                              "information matrix became singular (likely separation); use l2 > 0");
      }
      throw Error(ErrorCode::kNumeric, "Newton step failed");
    }

    // Newton decrement g' H^-1 g. Once it is near the rounding level of the
    // objective the line search cannot tell iterates apart; a few undamped
    // Newton steps then polish the gradient and the smallest one is kept.
    const double decrement = g.dot(step);
    if (decrement <= 1e-12 * std::max(1.0, std::fabs(objective))) {
      Eigen::VectorXd cur = beta - step;
      for (int k = 0; k < 4; ++k) {
        const Eigen::VectorXd pc = probabilities(Z, cur);
        Eigen::VectorXd gc = Z.transpose() * (pc - y);
        gc.tail(d) += l2 * cur.tail(d);
        const double gn = gc.norm();
        if (!(gn < fit.gradient_norm)) break;
        beta = cur;
        fit.gradient_norm = gn;
        if (gn <= tol) break;
        const Eigen::LDLT<Eigen::MatrixXd> polish(hessian(Z, pc, l2));
        const Eigen::VectorXd s2 = polish.solve(gc);
        if (polish.info() != Eigen::Success || !s2.allFinite()) break;
        cur = beta - s2;
      }
      objective = penalized_nll(Z, y, beta, l2);
      fit.iterations = iter + 1;
      converged = true;
      break;
    }

    // Backtracking keeps every iterate a descent step.
    double t = 1.0;
    Eigen::VectorXd candidate = beta - step;
    double cand_obj = penalized_nll(Z, y, candidate, l2);
    for (int k = 0; k < 40 && !(cand_obj <= objective); ++k) {
      t *= 0.5;
      candidate = beta - t * step;
      cand_obj = penalized_nll(Z, y, candidate, l2);
    }
    if (!(cand_obj <= objective)) {
      // No further decrease representable: at the optimum up to rounding.
      converged = decrement <= 1e-10 * std::max(1.0, std::fabs(objective));
      break;
    }
    beta = std::move(candidate);
    objective = cand_obj;
    if (l2 == 0.0 && beta.tail(d).cwiseAbs().maxCoeff() > kSeparationBound) {
      const int col = largest_coefficient(beta);
      throw SeparationError(col, "coefficient " + std::to_string(col) +
                                     " diverges (perfect separation); use l2 > 0");
    }
  }
  if (!converged) {
    if (l2 == 0.0) {
      const int col = largest_coefficient(beta);
      throw SeparationError(col, "IRLS did not converge (coefficient " + std::to_string(col) +
                                     " drifting, likely separation); use l2 > 0");
    }
    throw Error(ErrorCode::kNumeric, "IRLS did not converge within " +
                                         std::to_string(max_iter) + " iterations");
  }

  // A converged unpenalized fit with an odds ratio beyond e^15 is a
  // separated direction that stalled on rounding, not an estimate.
  if (l2 == 0.0 && d > 0 && beta.tail(d).cwiseAbs().maxCoeff() > kConvergedBound) {
    const int col = largest_coefficient(beta);
    throw SeparationError(col, "coefficient " + std::to_string(col) +
                                   " diverges (perfect separation); use l2 > 0");
  }

  const Eigen::VectorXd p = probabilities(Z, beta);
  const Eigen::MatrixXd H = hessian(Z, p, l2);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
    throw Error(ErrorCode::kDegenerate, "information matrix is singular at the optimum");
  }
  fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(d + 1, d + 1));
  fit.intercept = beta(0);
  fit.coefficients = beta.tail(d);
  return fit;
}

// ---------------------------------------------------------------------------

ojson LogisticModel::parameter_defaults() const { return {{"l2", 1.0}}; }

void LogisticModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions&) {
  fit_ = fit_logistic_irls(X, y, hp_.number("l2"));
}

Eigen::VectorXd LogisticModel::decision_function(const Eigen::MatrixXd& X) const {
  check_input(X);
  return (X * fit_.coefficients).array() + fit_.intercept;
}

Eigen::VectorXd LogisticModel::predict_proba(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd z = decision_function(X);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
  return z;
}

ojson LogisticModel::parameters() const {
  return {{"intercept", fit_.intercept},
          {"coefficients", std::vector<double>(fit_.coefficients.data(),
                                               fit_.coefficients.data() + fit_.coefficients.size())},
          {"iterations", fit_.iterations},
          {"gradient_norm", fit_.gradient_norm}};
}

}  // namespace anemiakit
