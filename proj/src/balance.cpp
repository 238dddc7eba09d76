#include "anemiakit/balance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace anemiakit {

void SmoteConfig::validate() const {
  if (k_neighbors < 1) throw Error(ErrorCode::kInvalidArgument, "smote k_neighbors must be >= 1");
  if (!(target_ratio > 0 && target_ratio <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "smote target_ratio must lie in (0, 1]");
  }
}

Eigen::RowVectorXd synthesize_point(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& neighbor,
                                    double lambda) {
  return x + lambda * (neighbor - x);
}

std::vector<std::vector<std::size_t>> minority_neighbors(const Eigen::MatrixXd& X,
                                                         const std::vector<std::size_t>& minority,
                                                         int k) {
  const std::size_t m = minority.size();
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::vector<std::size_t>> out(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < m; ++a) {
    dist.clear();
    const auto ra = static_cast<Eigen::Index>(minority[a]);
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      const auto rb = static_cast<Eigen::Index>(minority[b]);
      dist.emplace_back((X.row(ra) - X.row(rb)).squaredNorm(), b);
    }
    const std::size_t take = std::min(kk, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    for (std::size_t t = 0; t < take; ++t) out[a].push_back(dist[t].second);
  }
  return out;
}

ResampledSet smote_resample(const Eigen::MatrixXd& X, const Labels& y, const SmoteConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label count does not match rows");
  }
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
  // Class 1 is the minority on equal counts; nothing is generated then anyway.
  const int minority_class = members[1].size() <= members[0].size() ? 1 : 0;
  const auto& minority = members[minority_class];
  const double majority = static_cast<double>(members[1 - minority_class].size());
  const auto target = static_cast<std::size_t>(std::llround(cfg.target_ratio * majority));
  const std::size_t n_new = target > minority.size() ? target - minority.size() : 0;

  ResampledSet out;
  const auto n = static_cast<Eigen::Index>(y.size());
  out.values.resize(n + static_cast<Eigen::Index>(n_new), X.cols());
  out.values.topRows(n) = X;
  out.labels = y;
  out.synthetic.assign(y.size(), 0);
  if (n_new == 0) return out;

  if (minority.size() < static_cast<std::size_t>(cfg.k_neighbors) + 1) {
    throw Error(ErrorCode::kInfeasible,
                "minority class has " + std::to_string(minority.size()) + " rows; k_neighbors=" +
                    std::to_string(cfg.k_neighbors) + " needs at least " +
                    std::to_string(cfg.k_neighbors + 1) + " (reduce k_neighbors)");
  }
  const auto nn = minority_neighbors(X, minority, cfg.k_neighbors);
  Rng rng(derive_seed(cfg.seed, "smote"));
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t a = rng.below(minority.size());
    const std::size_t b = nn[a][rng.below(nn[a].size())];
    const double lambda = rng.uniform();
    const auto row = n + static_cast<Eigen::Index>(s);
    out.values.row(row) = synthesize_point(X.row(static_cast<Eigen::Index>(minority[a])),
                                           X.row(static_cast<Eigen::Index>(minority[b])), lambda);
    out.labels.push_back(minority_class);
    out.synthetic.push_back(1);
    out.parents.emplace_back(minority[a], minority[b]);
  }
  return out;
}

}  // namespace anemiakit
