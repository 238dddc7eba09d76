#include "anemiakit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace anemiakit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::kInvalidArgument, "score and label lengths differ");
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "scores must be finite");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::size_t count_positive(const Labels& y) {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

}  // namespace

ConfusionMatrix confusion(const Labels& truth, const Labels& predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label and prediction lengths differ");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    }
    if (t == 1) {
      (p == 1 ? cm.tp : cm.fn) += 1;
    } else {
      (p == 1 ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

BasicMetrics basic_metrics(const ConfusionMatrix& cm) {
  if (cm.n() <= 0) throw Error(ErrorCode::kInvalidArgument, "empty confusion matrix");
  BasicMetrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.n());
  const long pred_pos = cm.tp + cm.fp;
  const long actual_pos = cm.tp + cm.fn;
  m.precision_undefined = pred_pos == 0;
  m.recall_undefined = actual_pos == 0;
  m.precision = pred_pos ? static_cast<double>(cm.tp) / static_cast<double>(pred_pos) : 0.0;
  m.recall = actual_pos ? static_cast<double>(cm.tp) / static_cast<double>(actual_pos) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double cohens_kappa(const ConfusionMatrix& cm) {
  if (cm.n() <= 0) throw Error(ErrorCode::kInvalidArgument, "empty confusion matrix");
  const double n = static_cast<double>(cm.n());
  const double p0 = static_cast<double>(cm.tp + cm.tn) / n;
  const double pe = (static_cast<double>(cm.tp + cm.fn) * static_cast<double>(cm.tp + cm.fp) +
                     static_cast<double>(cm.tn + cm.fp) * static_cast<double>(cm.tn + cm.fn)) /
                    (n * n);
  if (pe >= 1.0) throw Error(ErrorCode::kDegenerate, "kappa undefined: chance agreement is 1");
  return (p0 - pe) / (1.0 - pe);
}

double average_precision(std::span<const double> scores, const Labels& truth) {
  check_lengths(scores.size(), truth.size());
  const std::size_t n_pos = count_positive(truth);
  if (n_pos == 0) throw Error(ErrorCode::kDegenerate, "average precision undefined without positives");
  const auto order = descending_order(scores);
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (truth[order[k]] != 1) continue;
    ++tp;
    ap += static_cast<double>(tp) / static_cast<double>(k + 1) / static_cast<double>(n_pos);
  }
  return ap;
}

double roc_auc(std::span<const double> scores, const Labels& truth) {
  check_lengths(scores.size(), truth.size());
  const std::size_t n = scores.size();
  const std::size_t n_pos = count_positive(truth);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kDegenerate, "AUC undefined for a single class");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "scores must be finite");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based); sums of half-integers stay exact.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (truth[order[k]] == 1) rank_sum += mid;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1) / 2.0) / (np * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, const Labels& truth) {
  check_lengths(scores.size(), truth.size());
  const std::size_t n_pos = count_positive(truth);
  const std::size_t n_neg = truth.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kDegenerate, "ROC undefined for a single class");
  const auto order = descending_order(scores);
  std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (truth[order[k]] == 1 ? tp : fp) += 1;
    if (k + 1 < order.size() && scores[order[k + 1]] == scores[order[k]]) continue;
    pts.push_back({scores[order[k]], static_cast<double>(fp) / static_cast<double>(n_neg),
                   static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  return pts;
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, const Labels& truth) {
  check_lengths(scores.size(), truth.size());
  const std::size_t n_pos = count_positive(truth);
  if (n_pos == 0) throw Error(ErrorCode::kDegenerate, "PR curve undefined without positives");
  const auto order = descending_order(scores);
  std::vector<PrPoint> pts;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (truth[order[k]] == 1) ++tp;
    if (k + 1 < order.size() && scores[order[k + 1]] == scores[order[k]]) continue;
    pts.push_back({scores[order[k]], static_cast<double>(tp) / static_cast<double>(n_pos),
                   static_cast<double>(tp) / static_cast<double>(k + 1)});
  }
  return pts;
}

// ---------------------------------------------------------------------------

std::array<double, 8> MetricReport::row_values() const {
  return {accuracy, precision, recall, f1, average_precision, auc, cohens_kappa, train_f1};
}

namespace {
ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }
double number_from(const ojson& v, double fallback) { return v.is_null() ? fallback : v.get<double>(); }
}  // namespace

ojson MetricReport::to_json() const {
  ojson doc = ojson::object();
  const auto values = row_values();
  ojson metrics = ojson::object();
  for (std::size_t i = 0; i < values.size(); ++i) metrics[std::string(kMetricRowNames[i])] = number_or_null(values[i]);
  doc["metrics"] = std::move(metrics);
  doc["confusion"] = {{"tp", confusion.tp}, {"tn", confusion.tn}, {"fp", confusion.fp}, {"fn", confusion.fn}};
  doc["flags"] = flags;
  ojson roc_doc = ojson::array();
  for (const auto& p : roc) roc_doc.push_back({number_or_null(p.threshold), p.fpr, p.tpr});
  ojson pr_doc = ojson::array();
  for (const auto& p : pr) pr_doc.push_back({number_or_null(p.threshold), p.recall, p.precision});
  doc["roc"] = std::move(roc_doc);
  doc["pr"] = std::move(pr_doc);
  return doc;
}

MetricReport MetricReport::from_json(const ojson& doc) {
  MetricReport r;
  const auto& m = doc.at("metrics");
  double* fields[] = {&r.accuracy, &r.precision, &r.recall, &r.f1,
                      &r.average_precision, &r.auc, &r.cohens_kappa, &r.train_f1};
  for (std::size_t i = 0; i < kMetricRowNames.size(); ++i) {
    *fields[i] = number_from(m.at(std::string(kMetricRowNames[i])), kNaN);
  }
  const auto& c = doc.at("confusion");
  r.confusion = {c.at("tp").get<long>(), c.at("tn").get<long>(), c.at("fp").get<long>(),
                 c.at("fn").get<long>()};
  r.flags = doc.at("flags").get<std::vector<std::string>>();
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& p : doc.at("roc")) r.roc.push_back({number_from(p[0], inf), p[1].get<double>(), p[2].get<double>()});
  for (const auto& p : doc.at("pr")) r.pr.push_back({number_from(p[0], inf), p[1].get<double>(), p[2].get<double>()});
  return r;
}

MetricReport evaluate_scores(const Eigen::VectorXd& test_proba, const Labels& y_test,
                             const Eigen::VectorXd& train_proba, const Labels& y_train) {
  auto hard = [](const Eigen::VectorXd& p) {
    Labels out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : 0;
    return out;
  };
  MetricReport r;
  r.confusion = confusion(y_test, hard(test_proba));
  const BasicMetrics bm = basic_metrics(r.confusion);
  r.accuracy = bm.accuracy;
  r.precision = bm.precision;
  r.recall = bm.recall;
  r.f1 = bm.f1;
  if (bm.precision_undefined) r.flags.emplace_back("Precision");
  if (bm.recall_undefined) r.flags.emplace_back("Recall");

  const std::span<const double> scores(test_proba.data(), static_cast<std::size_t>(test_proba.size()));
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
      r.flags.emplace_back(name);
      return kNaN;
    }
  };
  r.average_precision = guarded("Average Precision", [&] { return average_precision(scores, y_test); });
  r.auc = guarded("AUC", [&] { return roc_auc(scores, y_test); });
  r.cohens_kappa = guarded("Cohen's Kappa", [&] { return cohens_kappa(r.confusion); });
  r.train_f1 = basic_metrics(confusion(y_train, hard(train_proba))).f1;
  try {
    r.roc = roc_curve(scores, y_test);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerate) throw;
  }
  try {
    r.pr = pr_curve(scores, y_test);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerate) throw;
  }
  return r;
}

MetricReport evaluate(const ClassifierModel& model, const Eigen::MatrixXd& X_test,
                      const Labels& y_test, const Eigen::MatrixXd& X_train, const Labels& y_train) {
  return evaluate_scores(model.predict_proba(X_test), y_test, model.predict_proba(X_train), y_train);
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> CvPlan::validation(int repeat, int fold) const {
  std::vector<std::size_t> out;
  const auto& f = fold_of.at(static_cast<std::size_t>(repeat));
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> CvPlan::training(int repeat, int fold) const {
  std::vector<std::size_t> out;
  const auto& f = fold_of.at(static_cast<std::size_t>(repeat));
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != fold) out.push_back(i);
  }
  return out;
}

CvPlan make_cv_plan(const Labels& labels, int n_folds, int n_repeats, std::uint64_t seed) {
  if (n_folds < 2) throw Error(ErrorCode::kInvalidArgument, "n_folds must be >= 2");
  if (n_repeats < 1) throw Error(ErrorCode::kInvalidArgument, "n_repeats must be >= 1");
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    members[labels[i]].push_back(i);
  }
  for (const auto& m : members) {
    if (m.size() < static_cast<std::size_t>(n_folds)) {
      throw Error(ErrorCode::kInfeasible, "a class has fewer rows than folds");
    }
  }
  CvPlan plan;
  plan.n_folds = n_folds;
  plan.n_repeats = n_repeats;
  plan.seed = seed;
  for (int r = 0; r < n_repeats; ++r) {
    std::vector<int> fold(labels.size(), -1);
    // Dealing continues across classes so fold sizes also stay balanced.
    std::size_t dealt = 0;
    for (int c = 0; c < 2; ++c) {
      auto idx = members[c];
      Rng rng(derive_seed(seed, "cv", static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)));
      rng.shuffle(idx);
      for (std::size_t i : idx) fold[i] = static_cast<int>(dealt++ % static_cast<std::size_t>(n_folds));
    }
    plan.fold_of.push_back(std::move(fold));
  }
  return plan;
}

// ---------------------------------------------------------------------------

namespace {

struct FoldData {
  Eigen::MatrixXd X_fit;
  Labels y_fit;
  // Original row index of every fitting row; -1 marks a synthetic row.
  std::vector<long> fit_tag;
  std::vector<std::size_t> parent_rows;
  Eigen::MatrixXd X_val;
  Labels y_val;
  std::vector<long> val_tag;
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Labels take_labels(const Labels& y, const std::vector<std::size_t>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

FoldData build_fold(const Eigen::MatrixXd& X, const Labels& y, const std::vector<std::size_t>& train,
                    const std::vector<std::size_t>& val, const GridSearchOptions& options,
                    std::uint64_t smote_seed) {
  FoldData fd;
  const Eigen::MatrixXd Xt = take_rows(X, train);
  const Labels yt = take_labels(y, train);
  if (options.use_smote) {
    SmoteConfig cfg = options.smote;
    cfg.seed = smote_seed;
    ResampledSet rs = smote_resample(Xt, yt, cfg);
    fd.X_fit = std::move(rs.values);
    fd.y_fit = std::move(rs.labels);
    for (std::size_t i = 0; i < fd.y_fit.size(); ++i) {
      fd.fit_tag.push_back(rs.synthetic[i] ? -1L : static_cast<long>(train[i]));
    }
    for (const auto& [a, b] : rs.parents) {
      fd.parent_rows.push_back(train[a]);
      fd.parent_rows.push_back(train[b]);
    }
  } else {
    fd.X_fit = Xt;
    fd.y_fit = yt;
    for (std::size_t r : train) fd.fit_tag.push_back(static_cast<long>(r));
  }
  fd.X_val = take_rows(X, val);
  fd.y_val = take_labels(y, val);
  for (std::size_t r : val) fd.val_tag.push_back(static_cast<long>(r));
  return fd;
}

LeakageAudit audit_fold(const FoldData& fd, std::size_t n_rows) {
  LeakageAudit a;
  a.evaluations = 1;
  a.validation_rows_scored = fd.val_tag.size();
  std::vector<char> in_val(n_rows, 0);
  for (long t : fd.val_tag) {
    if (t < 0) {
      ++a.synthetic_rows_in_validation;
    } else {
      in_val[static_cast<std::size_t>(t)] = 1;
    }
  }
  for (long t : fd.fit_tag) {
    if (t >= 0 && in_val[static_cast<std::size_t>(t)]) ++a.validation_rows_in_training;
  }
  for (std::size_t p : fd.parent_rows) {
    if (in_val[p]) ++a.validation_rows_as_smote_parents;
  }
  return a;
}

void accumulate(LeakageAudit& total, const LeakageAudit& a) {
  total.evaluations += a.evaluations;
  total.validation_rows_scored += a.validation_rows_scored;
  total.synthetic_rows_in_validation += a.synthetic_rows_in_validation;
  total.validation_rows_in_training += a.validation_rows_in_training;
  total.validation_rows_as_smote_parents += a.validation_rows_as_smote_parents;
}

}  // namespace

GridSearchResult grid_search(LearnerId learner, const std::vector<HyperParams>& grid,
                             const CvPlan& plan, const Eigen::MatrixXd& X, const Labels& y,
                             const GridSearchOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "grid is empty");
  if (plan.n_rows() != y.size() || static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "CV plan, matrix and labels disagree on row count");
  }
  const std::size_t n_evals = static_cast<std::size_t>(plan.n_repeats) * static_cast<std::size_t>(plan.n_folds);

  std::vector<FoldData> folds(n_evals);
  parallel_for(n_evals, options.jobs, [&](std::size_t e) {
    const int r = static_cast<int>(e) / plan.n_folds;
    const int f = static_cast<int>(e) % plan.n_folds;
    folds[e] = build_fold(X, y, plan.training(r, f), plan.validation(r, f), options,
                          derive_seed(options.seed, "smote-fold", static_cast<std::uint64_t>(r),
                                      static_cast<std::uint64_t>(f)));
  });

  struct Slot {
    double f1 = 0.0;
    bool ok = false;
    std::string error;
    LeakageAudit audit;
  };
  std::vector<Slot> slots(grid.size() * n_evals);
  parallel_for(slots.size(), options.jobs, [&](std::size_t s) {
    const std::size_t c = s / n_evals, e = s % n_evals;
    const FoldData& fd = folds[e];
    Slot& slot = slots[s];
    try {
      auto model = make_learner(learner);
      FitOptions fo;
      fo.seed = derive_seed(options.seed, "fold-fit", e);
      fo.cardinalities = options.cardinalities;
      model->fit(fd.X_fit, fd.y_fit, grid[c], fo);
      slot.audit = audit_fold(fd, y.size());
      slot.f1 = basic_metrics(confusion(fd.y_val, model->predict(fd.X_val))).f1;
      slot.ok = true;
    } catch (const std::exception& ex) {
      slot.error = ex.what();
    }
  });

  GridSearchResult result;
  bool any_valid = false;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    CandidateResult cr;
    cr.hp = grid[c];
    for (std::size_t e = 0; e < n_evals; ++e) {
      const Slot& slot = slots[c * n_evals + e];
      if (!slot.ok) {
        if (cr.valid) cr.error = slot.error;
        cr.valid = false;
        continue;
      }
      accumulate(result.audit, slot.audit);
      cr.fold_f1.push_back(slot.f1);
    }
    if (cr.valid) {
      const double n = static_cast<double>(cr.fold_f1.size());
      cr.mean_f1 = std::accumulate(cr.fold_f1.begin(), cr.fold_f1.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : cr.fold_f1) ss += (v - cr.mean_f1) * (v - cr.mean_f1);
      cr.std_f1 = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
      if (!any_valid || cr.mean_f1 > result.candidates[result.best_index].mean_f1) result.best_index = c;
      any_valid = true;
    } else {
      cr.mean_f1 = kNaN;
      cr.std_f1 = kNaN;
    }
    result.candidates.push_back(std::move(cr));
  }
  if (!any_valid) {
    throw Error(ErrorCode::kSearchFailure, "every grid candidate failed for " +
                                               std::string(learner_name(learner)) + ": " +
                                               result.candidates.front().error);
  }
  result.best_hp = grid[result.best_index];

  Eigen::MatrixXd X_fit = X;
  Labels y_fit = y;
  if (options.use_smote) {
    SmoteConfig cfg = options.smote;
    cfg.seed = derive_seed(options.seed, "smote-refit");
    ResampledSet rs = smote_resample(X, y, cfg);
    X_fit = std::move(rs.values);
    y_fit = std::move(rs.labels);
  }
  result.model = make_learner(learner);
  FitOptions fo;
  fo.seed = derive_seed(options.seed, "refit");
  fo.cardinalities = options.cardinalities;
  fo.jobs = options.jobs;
  result.model->fit(X_fit, y_fit, result.best_hp, fo);
  return result;
}

}  // namespace anemiakit
