#include <algorithm>
#include <cmath>
#include <numeric>

#include "anemiakit/learners.hpp"

namespace anemiakit {

ojson KnnModel::parameter_defaults() const { return {{"k", 5}}; }

void KnnModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions&) {
  k_ = hp_.integer("k");
  if (k_ < 1 || k_ > X.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "k must lie in [1, n_train]");
  }
  train_ = X;
  labels_ = y;
}

Eigen::VectorXd KnnModel::predict_proba(const Eigen::MatrixXd& X) const {
  check_input(X);
  const auto n = static_cast<std::size_t>(train_.rows());
  const auto k = static_cast<std::size_t>(k_);
  Eigen::VectorXd out(X.rows());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (Eigen::Index q = 0; q < X.rows(); ++q) {
    const Eigen::VectorXd d2 = (train_.rowwise() - X.row(q)).rowwise().squaredNorm();
    for (std::size_t i = 0; i < n; ++i) dist[i] = {d2(static_cast<Eigen::Index>(i)), i};
    // Equidistant rows resolve by lower row index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t votes = 0;
    for (std::size_t j = 0; j < k; ++j) votes += static_cast<std::size_t>(labels_[dist[j].second]);
    double p = static_cast<double>(votes) / static_cast<double>(k);
    if (2 * votes == k) {
      // Tied vote: the single nearest neighbour decides, encoded so that
      // thresholding at 0.5 reproduces the decision.
      p = labels_[dist[0].second] == 1 ? 0.5 : std::nextafter(0.5, 0.0);
    }
    out(q) = p;
  }
  return out;
}

ojson KnnModel::parameters() const {
  return {{"k", k_}, {"n_train", train_.rows()}, {"metric", "euclidean"}};
}

}  // namespace anemiakit
