#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "anemiakit/common.hpp"

namespace anemiakit {

struct SmoteConfig {
  int k_neighbors = 5;
  // Minority / majority count after resampling.
  double target_ratio = 1.0;
  std::uint64_t seed = 0;
  void validate() const;
};

struct ResampledSet {
  // Original rows first and verbatim, synthetic rows appended.
  Eigen::MatrixXd values;
  Labels labels;
  std::vector<char> synthetic;
  // Per synthetic row (in order): the two minority parents, as row indices of
  // the input matrix.
  std::vector<std::pair<std::size_t, std::size_t>> parents;
  std::size_t n_original() const { return labels.size() - parents.size(); }
};

/// x + lambda * (neighbor - x).
Eigen::RowVectorXd synthesize_point(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& neighbor,
                                    double lambda);

/// k nearest minority neighbours of every minority row (Euclidean; ties by
/// lower row index; the row itself excluded). Indices are into `minority`.
std::vector<std::vector<std::size_t>> minority_neighbors(const Eigen::MatrixXd& X,
                                                         const std::vector<std::size_t>& minority,
                                                         int k);

/// Plain SMOTE on the encoded matrix: the minority class is topped up to
/// round(target_ratio * majority) rows. Only minority rows are ever read as
/// parents. Throws kInfeasible when the minority has fewer than k+1 rows.
ResampledSet smote_resample(const Eigen::MatrixXd& X, const Labels& y, const SmoteConfig& cfg);

}  // namespace anemiakit
