#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "anemiakit/balance.hpp"

using namespace anemiakit;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Labels y;
};

Problem random_problem(int n_pos, int n_neg, int d, std::uint64_t seed) {
  Rng r(seed);
  Problem p{Eigen::MatrixXd(n_pos + n_neg, d), Labels(static_cast<std::size_t>(n_pos + n_neg), 0)};
  for (int i = 0; i < n_pos + n_neg; ++i) {
    for (int j = 0; j < d; ++j) p.X(i, j) = r.normal() + (i < n_pos ? 1.0 : 0.0);
    if (i < n_pos) p.y[static_cast<std::size_t>(i)] = 1;
  }
  return p;
}

}  // namespace

TEST_CASE("interpolation midpoint") {
  Eigen::RowVectorXd a(2), b(2);
  a << 0, 0;
  b << 1, 1;
  const auto s = synthesize_point(a, b, 0.5);
  CHECK(s(0) == 0.5);
  CHECK(s(1) == 0.5);
}

TEST_CASE("class counts after resampling") {
  const auto p = random_problem(770, 1085, 3, 1);
  SmoteConfig cfg;
  cfg.seed = 9;
  const auto r = smote_resample(p.X, p.y, cfg);
  CHECK(r.parents.size() == 315);
  CHECK(r.n_original() == 1855);
  CHECK(std::count(r.labels.begin(), r.labels.end(), 1) == 1085);

  for (double ratio : {0.8, 0.9, 1.0}) {
    cfg.target_ratio = ratio;
    const auto q = smote_resample(p.X, p.y, cfg);
    const double pos = static_cast<double>(std::count(q.labels.begin(), q.labels.end(), 1));
    CHECK(std::abs(pos / 1085.0 - ratio) <= 1.0 / 1085.0);
  }
}

TEST_CASE("synthetic rows are convex combinations of minority parents") {
  const auto p = random_problem(40, 100, 4, 2);
  SmoteConfig cfg;
  cfg.seed = 3;
  const auto r = smote_resample(p.X, p.y, cfg);
  REQUIRE(r.values.rows() == 200);
  for (std::size_t s = 0; s < r.parents.size(); ++s) {
    const auto [a, b] = r.parents[s];
    CHECK(p.y[a] == 1);
    CHECK(p.y[b] == 1);
    const auto row = r.values.row(static_cast<Eigen::Index>(r.n_original() + s));
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      const double lo = std::min(p.X(static_cast<Eigen::Index>(a), j), p.X(static_cast<Eigen::Index>(b), j));
      const double hi = std::max(p.X(static_cast<Eigen::Index>(a), j), p.X(static_cast<Eigen::Index>(b), j));
      CHECK(row(j) >= lo - 1e-12);
      CHECK(row(j) <= hi + 1e-12);
    }
    CHECK(r.synthetic[r.n_original() + s]);
    CHECK(r.labels[r.n_original() + s] == 1);
  }
  // Originals are kept verbatim.
  CHECK(r.values.topRows(140) == p.X);
}

TEST_CASE("duplicated minority points give coincident synthetics") {
  Eigen::MatrixXd X(8, 2);
  X << 1, 2, 1, 2, 1, 2, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9;
  const Labels y{1, 1, 1, 0, 0, 0, 0, 0};
  SmoteConfig cfg;
  cfg.k_neighbors = 2;
  const auto r = smote_resample(X, y, cfg);
  REQUIRE(r.parents.size() == 2);
  for (Eigen::Index i = 8; i < r.values.rows(); ++i) {
    CHECK(r.values(i, 0) == 1.0);
    CHECK(r.values(i, 1) == 2.0);
  }
}

TEST_CASE("neighbours are minority rows ordered by distance") {
  Eigen::MatrixXd X(5, 1);
  X << 0, 10, 1, 3, 0.5;
  const std::vector<std::size_t> minority{0, 2, 3, 4};
  const auto nn = minority_neighbors(X, minority, 2);
  // Indices into `minority`.
  CHECK(nn[0] == std::vector<std::size_t>{3, 1});
  CHECK(nn[2] == std::vector<std::size_t>{1, 3});
}

TEST_CASE("determinism and infeasibility") {
  const auto p = random_problem(30, 70, 3, 4);
  SmoteConfig cfg;
  cfg.seed = 17;
  const auto a = smote_resample(p.X, p.y, cfg), b = smote_resample(p.X, p.y, cfg);
  CHECK(a.values == b.values);
  CHECK(a.parents == b.parents);
  cfg.seed = 18;
  CHECK(smote_resample(p.X, p.y, cfg).values != a.values);

  const auto tiny = random_problem(4, 20, 2, 5);
  SmoteConfig k5;
  CHECK_THROWS_AS(smote_resample(tiny.X, tiny.y, k5), Error);
  SmoteConfig bad;
  bad.target_ratio = 1.5;
  CHECK_THROWS_AS(smote_resample(p.X, p.y, bad), Error);
}
