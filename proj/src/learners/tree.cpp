#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anemiakit/learners.hpp"

namespace anemiakit {

namespace {

// Row order of each column with the values alongside, so split scans read
// memory sequentially.
struct SortedColumn {
  std::vector<int> rows;
  std::vector<double> values;
};
using SortedOrders = std::vector<SortedColumn>;

SortedOrders presort(const Eigen::MatrixXd& X) {
  SortedOrders orders(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& col = orders[static_cast<std::size_t>(f)];
    col.rows.resize(static_cast<std::size_t>(X.rows()));
    std::iota(col.rows.begin(), col.rows.end(), 0);
    std::stable_sort(col.rows.begin(), col.rows.end(),
                     [&](int a, int b) { return X(a, f) < X(b, f); });
    col.values.resize(col.rows.size());
    for (std::size_t k = 0; k < col.rows.size(); ++k) col.values[k] = X(col.rows[k], f);
  }
  return orders;
}

double weighted_gini(double w, double p) { return w > 0 ? 2.0 * p * (w - p) / w : 0.0; }

struct SplitCandidate {
  double decrease = 0.0;
  int feature = -1;
  double threshold = 0.0;
  double left_weight = 0.0;
  double left_positive = 0.0;
};

struct ScanState {
  double w = 0.0;
  double p = 0.0;
  double last = 0.0;
  bool has_last = false;
};

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

void grow_presorted(const Eigen::MatrixXd& X, const Labels& y, std::span<const double> weights,
                    const SortedOrders& orders, const TreeGrowParams& params,
                    std::uint64_t seed, std::vector<TreeNode>& nodes,
                    Eigen::VectorXd& importance) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<int>(X.cols());
  Rng rng(seed);
  nodes.clear();
  importance = Eigen::VectorXd::Zero(d);

  std::vector<int> node_of(n, -1);
  TreeNode root;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] <= 0) continue;
    node_of[i] = 0;
    root.weight += weights[i];
    root.positive += weights[i] * y[i];
  }
  nodes.push_back(root);

  const double min_leaf = std::max(1.0, params.min_samples_leaf);
  auto splittable = [&](const TreeNode& node, int depth) {
    if (params.max_depth >= 0 && depth >= params.max_depth) return false;
    if (node.weight < 2 * min_leaf) return false;
    return node.positive > 0 && node.positive < node.weight;
  };

  std::vector<int> frontier;
  if (splittable(nodes[0], 0)) frontier.push_back(0);
  // Per-tree copies of the sorted columns, compacted to live rows whenever a
  // column is scanned; retired rows never come back.
  SortedOrders live(static_cast<std::size_t>(d));
  std::vector<char> copied(static_cast<std::size_t>(d), 0);
  std::vector<int> slot_of(1, -1);
  const bool subsample = params.max_features > 0 && params.max_features < d;
  std::vector<int> feature_pool(static_cast<std::size_t>(d));

  for (int depth = 0; !frontier.empty(); ++depth) {
    const std::size_t m = frontier.size();
    slot_of.assign(nodes.size(), -1);
    for (std::size_t s = 0; s < m; ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);

    // Candidate features per frontier node, flattened slot-major.
    const auto du = static_cast<std::size_t>(d);
    std::vector<char> allowed(m * du, subsample ? 0 : 1);
    if (subsample) {
      for (std::size_t s = 0; s < m; ++s) {
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
        for (int k = 0; k < params.max_features; ++k) {
          const auto j = static_cast<std::size_t>(k) +
                         static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(d - k)));
          std::swap(feature_pool[static_cast<std::size_t>(k)], feature_pool[j]);
          allowed[s * du + static_cast<std::size_t>(feature_pool[static_cast<std::size_t>(k)])] = 1;
        }
      }
    }
    std::vector<char> used(du, 0);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t f = 0; f < du; ++f) used[f] |= allowed[s * du + f];
    }

    // Equal decreases are common in small nodes; a random per-node feature
    // priority breaks them so low column indices are not favoured.
    std::vector<std::uint32_t> priority(m * du);
    for (auto& v : priority) v = static_cast<std::uint32_t>(rng.next() >> 32);

    std::vector<int> row_slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] >= 0) row_slot[i] = slot_of[static_cast<std::size_t>(node_of[i])];
    }

    std::vector<SplitCandidate> best(m);
    std::vector<ScanState> state(m);
    for (int f = 0; f < d; ++f) {
      const auto fu = static_cast<std::size_t>(f);
      if (!used[fu]) continue;
      std::fill(state.begin(), state.end(), ScanState{});
      const SortedColumn& src = copied[fu] ? live[fu] : orders[fu];
      SortedColumn& dst = live[fu];
      if (!copied[fu]) {
        dst.rows.resize(src.rows.size());
        dst.values.resize(src.rows.size());
        copied[fu] = 1;
      }
      const std::size_t len = src.rows.size();
      std::size_t kept = 0;
      for (std::size_t k = 0; k < len; ++k) {
        const int i = src.rows[k];
        const int slot = row_slot[static_cast<std::size_t>(i)];
        if (slot < 0) continue;
        const double v = src.values[k];
        dst.rows[kept] = i;
        dst.values[kept] = v;
        ++kept;
        const auto su = static_cast<std::size_t>(slot);
        if (!allowed[su * du + fu]) continue;
        auto& st = state[su];
        if (st.has_last && v > st.last) {
          const TreeNode& parent = nodes[static_cast<std::size_t>(frontier[su])];
          const double wr = parent.weight - st.w;
          if (st.w >= min_leaf && wr >= min_leaf) {
            const double dec = weighted_gini(parent.weight, parent.positive) -
                               weighted_gini(st.w, st.p) -
                               weighted_gini(wr, parent.positive - st.p);
            auto& b = best[su];
            if (dec > b.decrease ||
                (dec == b.decrease && b.feature >= 0 && b.feature != f &&
                 priority[su * du + fu] < priority[su * du + static_cast<std::size_t>(b.feature)])) {
              b = {dec, f, midpoint(st.last, v), st.w, st.p};
            }
          }
        }
        const double w = weights[static_cast<std::size_t>(i)];
        st.w += w;
        st.p += w * y[static_cast<std::size_t>(i)];
        st.last = v;
        st.has_last = true;
      }
      dst.rows.resize(kept);
      dst.values.resize(kept);
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < m; ++s) {
      const auto& b = best[s];
      const int id = frontier[s];
      if (b.feature < 0 || !(b.decrease > 1e-12)) continue;
      TreeNode left, right;
      left.weight = b.left_weight;
      left.positive = b.left_positive;
      right.weight = nodes[static_cast<std::size_t>(id)].weight - b.left_weight;
      right.positive = nodes[static_cast<std::size_t>(id)].positive - b.left_positive;
      const int li = static_cast<int>(nodes.size());
      nodes.push_back(left);
      nodes.push_back(right);
      auto& parent = nodes[static_cast<std::size_t>(id)];
      parent.feature = b.feature;
      parent.threshold = b.threshold;
      parent.left = li;
      parent.right = li + 1;
      importance(b.feature) += b.decrease;
      if (splittable(nodes[static_cast<std::size_t>(li)], depth + 1)) next.push_back(li);
      if (splittable(nodes[static_cast<std::size_t>(li + 1)], depth + 1)) next.push_back(li + 1);
    }

    // Route rows of split nodes to children; rows in new leaves retire.
    for (std::size_t i = 0; i < n; ++i) {
      const int node = node_of[i];
      if (node < 0) continue;
      const TreeNode& t = nodes[static_cast<std::size_t>(node)];
      if (t.feature < 0) {
        node_of[i] = -1;
        continue;
      }
      node_of[i] = X(static_cast<Eigen::Index>(i), t.feature) <= t.threshold ? t.left : t.right;
    }
    frontier = std::move(next);
    std::vector<char> live(nodes.size(), 0);
    for (int id : frontier) live[static_cast<std::size_t>(id)] = 1;
    for (auto& node : node_of) {
      if (node >= 0 && !live[static_cast<std::size_t>(node)]) node = -1;
    }
  }
}

TreeGrowParams tree_params(const HyperParams& hp, int max_features) {
  TreeGrowParams p;
  p.max_depth = hp.is_null("max_depth") ? -1 : hp.integer("max_depth");
  if (!hp.is_null("max_depth") && p.max_depth < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_depth must be >= 0 or null");
  }
  p.min_samples_leaf = hp.integer("min_samples_leaf");
  if (p.min_samples_leaf < 1) throw Error(ErrorCode::kInvalidArgument, "min_samples_leaf must be >= 1");
  p.max_features = max_features;
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------

void CartTree::grow(const Eigen::MatrixXd& X, const Labels& y, std::span<const double> weights,
                    const TreeGrowParams& params, std::uint64_t seed) {
  std::vector<double> unit;
  if (weights.empty()) {
    unit.assign(static_cast<std::size_t>(X.rows()), 1.0);
    weights = unit;
  }
  grow_presorted(X, y, weights, presort(X), params, seed, nodes_, importance_);
}

int CartTree::leaf_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    id = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return id;
}

double CartTree::proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return nodes_[static_cast<std::size_t>(leaf_index(x))].proba();
}

int CartTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int out = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.feature < 0) continue;
    depth[static_cast<std::size_t>(node.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(node.right)] = depth[i] + 1;
    out = std::max(out, depth[i] + 1);
  }
  return out;
}

ojson CartTree::to_json() const {
  ojson arr = ojson::array();
  for (const auto& node : nodes_) {
    if (node.feature < 0) {
      arr.push_back({{"leaf", true}, {"weight", node.weight}, {"proba", node.proba()}});
    } else {
      arr.push_back({{"feature", node.feature},
                     {"threshold", node.threshold},
                     {"left", node.left},
                     {"right", node.right}});
    }
  }
  return arr;
}

// ---------------------------------------------------------------------------

ojson TreeModel::parameter_defaults() const {
  return {{"max_depth", nullptr}, {"min_samples_leaf", 1}};
}

void TreeModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) {
  tree_.grow(X, y, {}, tree_params(hp_, 0), options.seed);
}

Eigen::VectorXd TreeModel::predict_proba(const Eigen::MatrixXd& X) const {
  check_input(X);
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = tree_.proba(X.row(i));
  return out;
}

ojson TreeModel::parameters() const {
  return {{"depth", tree_.depth()}, {"nodes", tree_.to_json()}};
}

// ---------------------------------------------------------------------------

int mode_vote(std::span<const int> votes) {
  std::size_t ones = 0;
  for (int v : votes) ones += v == 1;
  return 2 * ones >= votes.size() ? 1 : 0;
}

ojson ForestModel::parameter_defaults() const {
  return {{"n_trees", 100},
          {"max_depth", nullptr},
          {"min_samples_leaf", 1},
          {"m_features", nullptr},
          {"bootstrap", true}};
}

void ForestModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) {
  const int n_trees = hp_.integer("n_trees");
  if (n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "n_trees must be >= 1");
  const int d = static_cast<int>(X.cols());
  int m = hp_.is_null("m_features")
              ? static_cast<int>(std::max(1L, std::lround(std::sqrt(static_cast<double>(d)))))
              : hp_.integer("m_features");
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "m_features must be >= 1");
  m = std::min(m, d);
  const TreeGrowParams params = tree_params(hp_, m >= d ? 0 : m);
  const bool bootstrap = hp_.flag("bootstrap");

  const SortedOrders orders = presort(X);
  const auto n = static_cast<std::size_t>(X.rows());
  trees_.assign(static_cast<std::size_t>(n_trees), CartTree{});
  parallel_for(trees_.size(), options.jobs, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(options.seed, "tree", t);
    std::vector<double> weights(n, bootstrap ? 0.0 : 1.0);
    if (bootstrap) {
      Rng rng(derive_seed(tree_seed, "bootstrap"));
      for (std::size_t k = 0; k < n; ++k) weights[static_cast<std::size_t>(rng.below(n))] += 1.0;
    }
    auto& tree = trees_[t];
    grow_presorted(X, y, weights, orders, params, tree_seed, tree.nodes_, tree.importance_);
  });
}

Eigen::VectorXd ForestModel::predict_proba(const Eigen::MatrixXd& X) const {
  check_input(X);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (const auto& tree : trees_) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) += tree.proba(X.row(i));
  }
  return out / static_cast<double>(trees_.size());
}

Labels ForestModel::vote(const Eigen::MatrixXd& X) const {
  check_input(X);
  Labels out(static_cast<std::size_t>(X.rows()));
  std::vector<int> votes(trees_.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (std::size_t t = 0; t < trees_.size(); ++t) votes[t] = trees_[t].proba(X.row(i)) >= 0.5;
    out[static_cast<std::size_t>(i)] = mode_vote(votes);
  }
  return out;
}

Eigen::VectorXd ForestModel::feature_importances() const {
  require_fitted();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(n_columns_);
  for (const auto& tree : trees_) {
    const double s = tree.impurity_decrease().sum();
    if (s > 0) total += tree.impurity_decrease() / s;
  }
  return total / static_cast<double>(trees_.size());
}

ojson ForestModel::parameters() const {
  ojson trees = ojson::array();
  for (const auto& tree : trees_) trees.push_back(tree.to_json());
  return {{"n_trees", trees_.size()}, {"trees", std::move(trees)}};
}

}  // namespace anemiakit
