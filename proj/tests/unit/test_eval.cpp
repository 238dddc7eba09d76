#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "anemiakit/eval.hpp"

using namespace anemiakit;

namespace {

double brute_auc(const std::vector<double>& s, const Labels& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      den += 1;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / den;
}

// Mean precision at each positive, ranks by score desc then index.
double brute_ap(const std::vector<double>& s, const Labels& y) {
  std::vector<std::size_t> order(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
  double hits = 0, total = 0, positives = 0;
  for (int v : y) positives += v;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (y[order[k]] == 1) {
      hits += 1;
      total += hits / static_cast<double>(k + 1);
    }
  }
  return total / positives;
}

}  // namespace

TEST_CASE("confusion tallies") {
  const Labels y{1, 1, 1, 1, 1, 0, 0, 0, 0, 0}, p{1, 1, 1, 0, 0, 0, 0, 0, 0, 1};
  const ConfusionMatrix cm = confusion(y, p);
  CHECK(cm == ConfusionMatrix{3, 4, 1, 2});
  CHECK(confusion(y, y).fp == 0);
  CHECK(confusion(y, y).fn == 0);
  Labels inv;
  for (int v : y) inv.push_back(1 - v);
  CHECK(confusion(y, inv).tp == 0);
  CHECK(confusion(y, inv).tn == 0);
  CHECK_THROWS_AS(confusion(y, Labels{1}), Error);
}

TEST_CASE("point metrics and kappa") {
  const auto m = basic_metrics({3, 4, 1, 2});
  CHECK(std::abs(m.accuracy - 0.7) < 1e-12);
  CHECK(std::abs(m.precision - 0.75) < 1e-12);
  CHECK(std::abs(m.recall - 0.6) < 1e-12);
  CHECK(std::abs(m.f1 - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(cohens_kappa({3, 4, 1, 2}) - 0.4) < 1e-12);
  const auto perfect = basic_metrics({5, 5, 0, 0});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(cohens_kappa({5, 5, 0, 0}) == 1.0);
  const auto none = basic_metrics({0, 5, 0, 5});
  CHECK(none.precision == 0.0);
  CHECK(none.precision_undefined);
  CHECK(none.recall == 0.0);
  CHECK_THROWS_AS(cohens_kappa({10, 0, 0, 0}), Error);
}

TEST_CASE("metric identities on fuzzed confusion matrices") {
  Rng r(1);
  for (int t = 0; t < 1000; ++t) {
    const ConfusionMatrix cm{static_cast<long>(r.below(50)) + 1, static_cast<long>(r.below(50)) + 1,
                             static_cast<long>(r.below(50)), static_cast<long>(r.below(50))};
    const auto m = basic_metrics(cm);
    CHECK(m.accuracy == doctest::Approx(static_cast<double>(cm.tp + cm.tn) / cm.n()));
    CHECK(m.f1 == doctest::Approx(2 * m.precision * m.recall / (m.precision + m.recall)));
    const double k = cohens_kappa(cm);
    CHECK(k >= -1.0);
    CHECK(k <= 1.0);
  }
}

TEST_CASE("kappa of independent predictions is near zero") {
  Rng r(2);
  Labels y(10000), p(10000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = r.uniform() < 0.4;
    p[i] = r.uniform() < 0.4;
  }
  CHECK(std::abs(cohens_kappa(confusion(y, p))) < 0.03);
}

TEST_CASE("ranking metric fixtures") {
  const std::vector<double> s{0.9, 0.8, 0.7};
  CHECK(std::abs(average_precision(s, Labels{1, 0, 1}) - 5.0 / 6.0) < 1e-12);
  CHECK(average_precision(s, Labels{1, 1, 0}) == 1.0);
  CHECK(std::abs(average_precision(std::vector<double>{4, 3, 2, 1}, Labels{0, 0, 0, 1}) - 0.25) < 1e-12);
  const std::vector<double> a{0.9, 0.8, 0.85, 0.7};
  CHECK(std::abs(roc_auc(a, Labels{1, 1, 0, 0}) - 0.75) < 1e-12);
  CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5}, Labels{1, 0, 1}) == 0.5);
  CHECK(roc_auc(std::vector<double>{0.9, 0.1}, Labels{1, 0}) == 1.0);
  CHECK_THROWS_AS(roc_auc(s, Labels{1, 1, 1}), Error);
  CHECK_THROWS_AS(average_precision(s, Labels{0, 0, 0}), Error);
}

TEST_CASE("midrank AUC and AP match brute force and ignore monotone transforms") {
  Rng r(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + r.below(199);
    std::vector<double> s(n), e(n);
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(r.below(20)) / 20.0;  // plenty of ties
      e[i] = std::exp(3 * s[i]) - 7;
      y[i] = static_cast<int>(r.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(std::abs(roc_auc(s, y) - brute_auc(s, y)) <= 1e-12);
    CHECK(std::abs(average_precision(s, y) - brute_ap(s, y)) <= 1e-12);
    CHECK(roc_auc(e, y) == roc_auc(s, y));
    CHECK(average_precision(e, y) == average_precision(s, y));
  }
}

TEST_CASE("curves") {
  const std::vector<double> s{0.9, 0.8, 0.85, 0.7};
  const Labels y{1, 1, 0, 0};
  const auto roc = roc_curve(s, y);
  REQUIRE(roc.size() == 5);
  CHECK(std::isinf(roc.front().threshold));
  CHECK(roc.front().fpr == 0.0);
  CHECK(roc.back().fpr == 1.0);
  CHECK(roc.back().tpr == 1.0);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].fpr >= roc[i - 1].fpr);
    CHECK(roc[i].tpr >= roc[i - 1].tpr);
  }
  const auto pr = pr_curve(s, y);
  REQUIRE(pr.size() == 4);
  CHECK(pr.front().precision == 1.0);
  CHECK(pr.back().recall == 1.0);
}

TEST_CASE("report json round trip is exact") {
  const Eigen::VectorXd p = (Eigen::VectorXd(6) << 0.91, 0.12, 0.66, 0.4, 0.31, 0.77).finished();
  const Labels y{1, 0, 1, 0, 1, 0};
  const MetricReport r = evaluate_scores(p, y, p, y);
  const MetricReport back = MetricReport::from_json(ojson::parse(r.to_json().dump()));
  CHECK(back.to_json().dump() == r.to_json().dump());
  CHECK(back.row_values() == r.row_values());

  // Perfect and uninformative scorers.
  const Eigen::VectorXd perfect = (Eigen::VectorXd(6) << 1, 0, 1, 0, 1, 0).finished();
  const auto pr = evaluate_scores(perfect, y, perfect, y);
  for (double v : pr.row_values()) CHECK(v == 1.0);
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(6, 0.5);
  const auto fl = evaluate_scores(flat, y, flat, y);
  CHECK(fl.auc == 0.5);
  CHECK(fl.cohens_kappa == doctest::Approx(0.0));

  // Single-class test set: undefined metrics are flagged, not thrown.
  const Labels ones{1, 1, 1, 1, 1, 1};
  const auto one = evaluate_scores(p, ones, p, y);
  CHECK(std::isnan(one.auc));
  CHECK(!one.flags.empty());
  const MetricReport back_nan = MetricReport::from_json(ojson::parse(one.to_json().dump()));
  CHECK(std::isnan(back_nan.auc));
}

TEST_CASE("cv plan structure") {
  Labels y(100, 0);
  std::fill(y.begin(), y.begin() + 40, 1);
  const CvPlan plan = make_cv_plan(y, 5, 3, 7);
  std::vector<int> seen(100, 0);
  std::set<std::vector<std::size_t>> distinct;
  for (int r = 0; r < 3; ++r) {
    for (int f = 0; f < 5; ++f) {
      const auto val = plan.validation(r, f);
      const auto tr = plan.training(r, f);
      CHECK(val.size() + tr.size() == 100);
      int pos = 0;
      for (auto i : val) {
        pos += y[i];
        seen[i]++;
      }
      CHECK(pos == 8);
      CHECK(val.size() == 20);
      distinct.insert(val);
    }
  }
  for (int s : seen) CHECK(s == 3);
  CHECK(distinct.size() == 15);
  CHECK(make_cv_plan(y, 5, 3, 7).fold_of == plan.fold_of);
  CHECK(make_cv_plan(y, 5, 3, 8).fold_of != plan.fold_of);
  Labels few(10, 0);
  few[0] = few[1] = 1;
  CHECK_THROWS_AS(make_cv_plan(few, 5, 1, 0), Error);
}

TEST_CASE("grid search picks the planted winner and keeps folds clean") {
  Rng r(4);
  const int n = 400;
  Eigen::MatrixXd X(n, 3);
  Labels y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = r.normal();
    y[static_cast<std::size_t>(i)] = r.uniform() < sigmoid(2.5 * X(i, 0) - 1.5 * X(i, 1) - 1.0) ? 1 : 0;
  }
  const CvPlan plan = make_cv_plan(y, 5, 3, 1);
  GridSearchOptions opt;
  opt.seed = 2;
  const std::vector<HyperParams> grid{HyperParams(ojson{{"l2", 1000000.0}}), HyperParams(ojson{{"l2", 0.1}})};
  const auto res = grid_search(LearnerId::kLR, grid, plan, X, y, opt);
  CHECK(res.best_hp == grid[1]);
  CHECK(res.candidates[1].fold_f1.size() == 15);
  CHECK(res.audit.evaluations == 30);
  CHECK(res.audit.validation_rows_scored == 2u * 3u * 400u);
  CHECK(res.audit.clean());
  REQUIRE(res.model);
  CHECK(res.model->fitted());

  const auto again = grid_search(LearnerId::kLR, grid, plan, X, y, opt);
  CHECK(again.best_hp == res.best_hp);
  for (std::size_t c = 0; c < grid.size(); ++c) CHECK(again.candidates[c].fold_f1 == res.candidates[c].fold_f1);
  GridSearchOptions par = opt;
  par.jobs = 3;
  const auto threaded = grid_search(LearnerId::kLR, grid, plan, X, y, par);
  for (std::size_t c = 0; c < grid.size(); ++c) CHECK(threaded.candidates[c].fold_f1 == res.candidates[c].fold_f1);

  const std::vector<HyperParams> one{HyperParams(ojson{{"l2", 5.0}})};
  CHECK(grid_search(LearnerId::kLR, one, plan, X, y, opt).best_hp == one[0]);

  // Identical candidates tie; the first in grid order wins.
  const std::vector<HyperParams> dup{HyperParams(ojson{{"l2", 1.0}}), HyperParams(ojson{{"l2", 1.0}})};
  CHECK(grid_search(LearnerId::kLR, dup, plan, X, y, opt).best_index == 0);

  const std::vector<HyperParams> broken{HyperParams(ojson{{"l2", -1.0}})};
  CHECK_THROWS_AS(grid_search(LearnerId::kLR, broken, plan, X, y, opt), Error);
}
