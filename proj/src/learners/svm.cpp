#include <algorithm>
#include <cmath>
#include <limits>

#include "anemiakit/learners.hpp"

namespace anemiakit {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Lazily computed rows of Q_ij = y_i y_j K(x_i, x_j).
class KernelRows {
 public:
  KernelRows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelKind kind, double gamma)
      : X_(X), y_(y), kind_(kind), gamma_(gamma), rows_(static_cast<std::size_t>(X.rows())) {
    sq_norms_ = X.rowwise().squaredNorm();
    diag_.resize(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      diag_(i) = kind_ == KernelKind::kRbf ? 1.0 : sq_norms_(i);
    }
  }

  const Eigen::VectorXd& row(Eigen::Index i) {
    auto& r = rows_[static_cast<std::size_t>(i)];
    if (r.size() == 0) {
      Eigen::VectorXd k = X_ * X_.row(i).transpose();
      if (kind_ == KernelKind::kRbf) {
        for (Eigen::Index j = 0; j < k.size(); ++j) {
          const double d2 = std::max(0.0, sq_norms_(i) + sq_norms_(j) - 2.0 * k(j));
          k(j) = std::exp(-gamma_ * d2);
        }
        k(i) = 1.0;
      }
      r = (k.array() * y_.array()).matrix() * y_(i);
    }
    return r;
  }

  const Eigen::VectorXd& diag() const { return diag_; }

 private:
  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  KernelKind kind_;
  double gamma_;
  Eigen::VectorXd sq_norms_;
  Eigen::VectorXd diag_;
  std::vector<Eigen::VectorXd> rows_;
};

struct SmoResult {
  Eigen::VectorXd alpha;
  double rho = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Dual C-SVC: min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0. Second-order working
// set selection; no shrinking.
SmoResult solve_dual(KernelRows& Q, const Eigen::VectorXd& y, double C, double eps, long max_iter) {
  const Eigen::Index l = y.size();
  SmoResult res;
  Eigen::VectorXd& alpha = res.alpha;
  alpha = Eigen::VectorXd::Zero(l);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(l, -1.0);
  const Eigen::VectorXd& QD = Q.diag();
  auto upper = [&](Eigen::Index t) { return alpha(t) >= C; };
  auto lower = [&](Eigen::Index t) { return alpha(t) <= 0; };

  long iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -kInf, gmax2 = -kInf, obj_diff_min = kInf;
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (y(t) > 0) {
        if (!upper(t) && -G(t) >= gmax) { gmax = -G(t); i = t; }
      } else {
        if (!lower(t) && G(t) >= gmax) { gmax = G(t); i = t; }
      }
    }
    if (i < 0) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd& Qi = Q.row(i);
    for (Eigen::Index t = 0; t < l; ++t) {
      if (y(t) > 0) {
        if (!lower(t)) {
          const double grad_diff = gmax + G(t);
          if (G(t) >= gmax2) gmax2 = G(t);
          if (grad_diff > 0) {
            double quad = QD(i) + QD(t) - 2.0 * y(i) * Qi(t);
            const double obj_diff = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
            if (obj_diff <= obj_diff_min) { j = t; obj_diff_min = obj_diff; }
          }
        }
      } else {
        if (!upper(t)) {
          const double grad_diff = gmax - G(t);
          if (-G(t) >= gmax2) gmax2 = -G(t);
          if (grad_diff > 0) {
            double quad = QD(i) + QD(t) + 2.0 * y(i) * Qi(t);
            const double obj_diff = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
            if (obj_diff <= obj_diff_min) { j = t; obj_diff_min = obj_diff; }
          }
        }
      }
    }
    if (gmax + gmax2 < eps || j < 0) {
      res.converged = true;
      break;
    }

    const Eigen::VectorXd& Qj = Q.row(j);
    const double old_ai = alpha(i), old_aj = alpha(j);
    if (y(i) != y(j)) {
      double quad = QD(i) + QD(j) + 2 * Qi(j);
      if (quad <= 0) quad = kTau;
      const double delta = (-G(i) - G(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = -diff; }
      }
      if (diff > 0) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = C - diff; }
      } else {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = C + diff; }
      }
    } else {
      double quad = QD(i) + QD(j) - 2 * Qi(j);
      if (quad <= 0) quad = kTau;
      const double delta = (G(i) - G(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = sum - C; }
      } else {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = sum; }
      }
      if (sum > C) {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = sum - C; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = sum; }
      }
    }
    const double dai = alpha(i) - old_ai, daj = alpha(j) - old_aj;
    G += Qi * dai + Qj * daj;
  }
  res.iterations = static_cast<int>(iter);

  double ub = kInf, lb = -kInf, sum_free = 0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < l; ++t) {
    const double yG = y(t) * G(t);
    if (upper(t)) {
      if (y(t) < 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
    } else if (lower(t)) {
      if (y(t) > 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
    } else {
      ++n_free;
      sum_free += yG;
    }
  }
  res.rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2;
  return res;
}

double platt_term(double fApB, double t) {
  return fApB >= 0 ? t * fApB + std::log1p(std::exp(-fApB))
                   : (t - 1) * fApB + std::log1p(std::exp(fApB));
}

}  // namespace

std::pair<double, double> fit_platt_sigmoid(std::span<const double> dec, const Labels& y) {
  const std::size_t l = dec.size();
  double prior1 = 0, prior0 = 0;
  for (int v : y) (v == 1 ? prior1 : prior0) += 1;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(l);
  for (std::size_t i = 0; i < l; ++i) t[i] = y[i] == 1 ? hi : lo;

  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double a, double b) {
    double f = 0;
    for (std::size_t i = 0; i < l; ++i) f += platt_term(dec[i] * a + b, t[i]);
    return f;
  };
  double fval = objective(A, B);
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < l; ++i) {
      const double fApB = dec[i] * A + B;
      double p, q;
      if (fApB >= 0) {
        p = std::exp(-fApB) / (1.0 + std::exp(-fApB));
        q = 1.0 / (1.0 + std::exp(-fApB));
      } else {
        p = 1.0 / (1.0 + std::exp(fApB));
        q = std::exp(fApB) / (1.0 + std::exp(fApB));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::fabs(g1) < 1e-5 && std::fabs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= 1e-10) {
      const double nA = A + step * dA, nB = B + step * dB;
      const double nf = objective(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < 1e-10) break;
  }
  return {A, B};
}

// ---------------------------------------------------------------------------

ojson SvmModel::parameter_defaults() const {
  return {{"C", 1.0}, {"kernel", "rbf"}, {"gamma", nullptr}, {"tol", 1e-3}, {"max_iter", nullptr}};
}

double SvmModel::kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                        const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
  if (kernel_ == KernelKind::kLinear) return a.dot(b);
  return std::exp(-gamma_ * (a - b).squaredNorm());
}

void SvmModel::do_fit(const Eigen::MatrixXd& X, const Labels& labels, const FitOptions&) {
  cost_ = hp_.number("C");
  if (!(cost_ > 0)) throw Error(ErrorCode::kInvalidArgument, "C must be > 0");
  const std::string kind = hp_.text("kernel");
  if (kind == "linear") {
    kernel_ = KernelKind::kLinear;
  } else if (kind == "rbf") {
    kernel_ = KernelKind::kRbf;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "kernel must be 'linear' or 'rbf'");
  }
  gamma_ = hp_.is_null("gamma") ? 1.0 / static_cast<double>(X.cols()) : hp_.number("gamma");
  if (!(gamma_ > 0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be > 0");
  const double tol = hp_.number("tol");
  const long max_iter = hp_.is_null("max_iter")
                            ? std::max<long>(1000000L, 100L * static_cast<long>(X.rows()))
                            : static_cast<long>(hp_.integer("max_iter"));

  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
  KernelRows Q(X, y, kernel_, gamma_);
  const SmoResult res = solve_dual(Q, y, cost_, tol, max_iter);
  converged_ = res.converged;
  iterations_ = res.iterations;
  alpha_full_ = res.alpha;
  bias_ = -res.rho;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (res.alpha(i) > 0) sv.push_back(i);
  }
  support_.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  coef_.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    support_.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
    coef_(static_cast<Eigen::Index>(k)) = res.alpha(sv[k]) * y(sv[k]);
  }

  const Eigen::VectorXd dec = decision_function(X);
  std::tie(platt_a_, platt_b_) =
      fit_platt_sigmoid(std::span<const double>(dec.data(), static_cast<std::size_t>(dec.size())), labels);
}

Eigen::VectorXd SvmModel::decision_function(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_columns_) throw Error(ErrorCode::kInvalidArgument, "column count mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), bias_);
  if (support_.rows() == 0) return out;
  if (kernel_ == KernelKind::kLinear) {
    out += X * (support_.transpose() * coef_);
    return out;
  }
  const Eigen::VectorXd sv_norms = support_.rowwise().squaredNorm();
  const Eigen::MatrixXd cross = X * support_.transpose();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double xn = X.row(i).squaredNorm();
    double s = 0.0;
    for (Eigen::Index k = 0; k < support_.rows(); ++k) {
      s += coef_(k) * std::exp(-gamma_ * std::max(0.0, xn + sv_norms(k) - 2.0 * cross(i, k)));
    }
    out(i) += s;
  }
  return out;
}

Eigen::VectorXd SvmModel::predict_proba(const Eigen::MatrixXd& X) const {
  check_input(X);
  Eigen::VectorXd f = decision_function(X);
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = sigmoid(-(platt_a_ * f(i) + platt_b_));
  return f;
}

std::optional<Eigen::VectorXd> SvmModel::primal_weights() const {
  require_fitted();
  if (kernel_ != KernelKind::kLinear) return std::nullopt;
  return Eigen::VectorXd(support_.transpose() * coef_);
}

ojson SvmModel::parameters() const {
  return {{"kernel", kernel_ == KernelKind::kLinear ? "linear" : "rbf"},
          {"gamma", gamma_},
          {"bias", bias_},
          {"n_support", support_.rows()},
          {"dual_coef", std::vector<double>(coef_.data(), coef_.data() + coef_.size())},
          {"platt_a", platt_a_},
          {"platt_b", platt_b_},
          {"converged", converged_},
          {"iterations", iterations_}};
}

}  // namespace anemiakit
