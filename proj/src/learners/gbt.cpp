#include <algorithm>
#include <cmath>
#include <numeric>

#include "anemiakit/learners.hpp"

namespace anemiakit {

namespace {

double logistic_loss(const Eigen::VectorXd& margin, const Labels& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double z = margin(i);
    total += std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) -
             y[static_cast<std::size_t>(i)] * z;
  }
  return total / static_cast<double>(margin.size());
}

struct GbtParams {
  int max_depth = 6;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
};

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  double g_left = 0.0;
  double h_left = 0.0;
};

struct Scan {
  double g = 0.0;
  double h = 0.0;
  double last = 0.0;
  bool has_last = false;
};

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

/// Grows one second-order regression tree; returns the leaf id reached by
/// every training row in `leaf_of`.
std::vector<GbtNode> grow_gbt_tree(const Eigen::MatrixXd& X, const std::vector<std::vector<int>>& orders,
                                   const Eigen::VectorXd& grad, const Eigen::VectorXd& hess,
                                   const GbtParams& p, std::vector<int>& leaf_of) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<int>(X.cols());
  std::vector<GbtNode> nodes(1);
  std::vector<NodeStats> stats(1);
  stats[0] = {grad.sum(), hess.sum()};
  std::vector<int> node_of(n, 0);
  leaf_of.assign(n, 0);

  auto splittable = [&](int id, int depth) {
    return depth < p.max_depth && stats[static_cast<std::size_t>(id)].h >= 2 * p.min_child_weight;
  };
  std::vector<int> frontier;
  if (splittable(0, 0)) frontier.push_back(0);

  for (int depth = 0; !frontier.empty(); ++depth) {
    const std::size_t m = frontier.size();
    std::vector<int> slot_of(nodes.size(), -1);
    for (std::size_t s = 0; s < m; ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    std::vector<Candidate> best(m);
    std::vector<Scan> scan(m);
    for (int f = 0; f < d; ++f) {
      std::fill(scan.begin(), scan.end(), Scan{});
      for (int i : orders[static_cast<std::size_t>(f)]) {
        const int node = node_of[static_cast<std::size_t>(i)];
        if (node < 0) continue;
        const int slot = slot_of[static_cast<std::size_t>(node)];
        if (slot < 0) continue;
        auto& st = scan[static_cast<std::size_t>(slot)];
        const double v = X(i, f);
        if (st.has_last && v > st.last) {
          const auto& tot = stats[static_cast<std::size_t>(node)];
          const double hr = tot.h - st.h;
          if (st.h >= p.min_child_weight && hr >= p.min_child_weight) {
            const double gain = 0.5 * (score(st.g, st.h, p.lambda) +
                                       score(tot.g - st.g, hr, p.lambda) -
                                       score(tot.g, tot.h, p.lambda)) -
                                p.gamma;
            auto& b = best[static_cast<std::size_t>(slot)];
            if (gain > b.gain) {
              const double mid = st.last + (v - st.last) / 2.0;
              b = {gain, f, mid < v ? mid : st.last, st.g, st.h};
            }
          }
        }
        st.g += grad(i);
        st.h += hess(i);
        st.last = v;
        st.has_last = true;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < m; ++s) {
      const auto& b = best[s];
      if (b.feature < 0) continue;
      const int id = frontier[s];
      const int li = static_cast<int>(nodes.size());
      const NodeStats parent = stats[static_cast<std::size_t>(id)];
      nodes.emplace_back();
      nodes.emplace_back();
      stats.push_back({b.g_left, b.h_left});
      stats.push_back({parent.g - b.g_left, parent.h - b.h_left});
      auto& node = nodes[static_cast<std::size_t>(id)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.left = li;
      node.right = li + 1;
      if (splittable(li, depth + 1)) next.push_back(li);
      if (splittable(li + 1, depth + 1)) next.push_back(li + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int node = node_of[i];
      if (node < 0) continue;
      const auto& t = nodes[static_cast<std::size_t>(node)];
      if (t.feature < 0) {
        leaf_of[i] = node;
        node_of[i] = -1;
        continue;
      }
      node_of[i] = X(static_cast<Eigen::Index>(i), t.feature) <= t.threshold ? t.left : t.right;
    }
    frontier = std::move(next);
    std::vector<char> live(nodes.size(), 0);
    for (int id : frontier) live[static_cast<std::size_t>(id)] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const int node = node_of[i];
      if (node >= 0 && !live[static_cast<std::size_t>(node)]) {
        leaf_of[i] = node;
        node_of[i] = -1;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (node_of[i] >= 0) leaf_of[i] = node_of[i];
  }
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (nodes[id].feature < 0) nodes[id].leaf_weight = -stats[id].g / (stats[id].h + p.lambda);
  }
  return nodes;
}

double tree_value(const std::vector<GbtNode>& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  int id = 0;
  while (tree[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = tree[static_cast<std::size_t>(id)];
    id = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return tree[static_cast<std::size_t>(id)].leaf_weight;
}

}  // namespace

ojson GbtModel::parameter_defaults() const {
  return {{"n_rounds", 100}, {"eta", 0.3},           {"max_depth", 6},
          {"lambda", 1.0},   {"gamma", 0.0},         {"min_child_weight", 1.0},
          {"base_score", nullptr}};
}

void GbtModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions&) {
  const int rounds = hp_.integer("n_rounds");
  eta_ = hp_.number("eta");
  GbtParams p;
  p.max_depth = hp_.integer("max_depth");
  p.lambda = hp_.number("lambda");
  p.gamma = hp_.number("gamma");
  p.min_child_weight = hp_.number("min_child_weight");
  if (rounds < 1) throw Error(ErrorCode::kInvalidArgument, "n_rounds must be >= 1");
  if (!(eta_ > 0)) throw Error(ErrorCode::kInvalidArgument, "eta must be > 0");
  if (p.max_depth < 0 || p.lambda < 0 || p.gamma < 0 || p.min_child_weight < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_depth, lambda, gamma, min_child_weight must be >= 0");
  }

  const Eigen::Index n = X.rows();
  if (hp_.is_null("base_score")) {
    const double prevalence =
        static_cast<double>(std::accumulate(y.begin(), y.end(), 0)) / static_cast<double>(n);
    base_score_ = std::log(prevalence / (1.0 - prevalence));
  } else {
    // Given as a probability, stored as a margin.
    const double b = hp_.number("base_score");
    if (!(b > 0 && b < 1)) throw Error(ErrorCode::kInvalidArgument, "base_score must lie in (0, 1)");
    base_score_ = std::log(b / (1.0 - b));
  }

  std::vector<std::vector<int>> orders(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& order = orders[static_cast<std::size_t>(f)];
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
  }

  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, base_score_);
  Eigen::VectorXd grad(n), hess(n);
  trees_.clear();
  loss_history_.clear();
  loss_history_.push_back(logistic_loss(margin, y));
  std::vector<int> leaf_of;
  for (int r = 0; r < rounds; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = sigmoid(margin(i));
      grad(i) = prob - y[static_cast<std::size_t>(i)];
      hess(i) = std::max(prob * (1.0 - prob), 1e-16);
    }
    auto tree = grow_gbt_tree(X, orders, grad, hess, p, leaf_of);
    for (Eigen::Index i = 0; i < n; ++i) {
      margin(i) += eta_ * tree[static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(i)])].leaf_weight;
    }
    trees_.push_back(std::move(tree));
    loss_history_.push_back(logistic_loss(margin, y));
    if (!std::isfinite(loss_history_.back())) {
      throw Error(ErrorCode::kDiverged, "boosting produced a non-finite training loss");
    }
  }
}

Eigen::VectorXd GbtModel::margin(const Eigen::MatrixXd& X) const {
  check_input(X);
  Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_score_);
  for (const auto& tree : trees_) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) += eta_ * tree_value(tree, X.row(i));
  }
  return out;
}

Eigen::VectorXd GbtModel::predict_proba(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd m = margin(X);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = sigmoid(m(i));
  return m;
}

ojson GbtModel::parameters() const {
  ojson trees = ojson::array();
  for (const auto& tree : trees_) {
    ojson t = ojson::array();
    for (const auto& node : tree) {
      if (node.feature < 0) {
        t.push_back({{"leaf_weight", node.leaf_weight}});
      } else {
        t.push_back({{"feature", node.feature},
                     {"threshold", node.threshold},
                     {"left", node.left},
                     {"right", node.right}});
      }
    }
    trees.push_back(std::move(t));
  }
  return {{"base_score", base_score_}, {"eta", eta_}, {"trees", std::move(trees)}};
}

}  // namespace anemiakit
