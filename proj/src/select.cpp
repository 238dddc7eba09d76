#include "anemiakit/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "anemiakit/learners.hpp"

namespace anemiakit {

ChiSquareResult chi_square_test(const Eigen::MatrixXd& table) {
  if (table.cols() < 2) throw Error(ErrorCode::kInvalidArgument, "chi-square table needs >= 2 columns");
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    if (table.row(r).sum() > 0) rows.push_back(r);
  }
  const Eigen::VectorXd col_sums = table.colwise().sum().transpose();
  if (rows.size() < 2 || (col_sums.array() <= 0).any()) {
    throw Error(ErrorCode::kDegenerate, "contingency table has an empty margin");
  }
  const double n = col_sums.sum();
  ChiSquareResult out;
  for (Eigen::Index r : rows) {
    const double row_sum = table.row(r).sum();
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double expected = row_sum * col_sums(c) / n;
      const double diff = table(r, c) - expected;
      out.statistic += diff * diff / expected;
    }
  }
  out.dof = static_cast<int>((rows.size() - 1) * static_cast<std::size_t>(table.cols() - 1));
  out.p_value = boost::math::cdf(
      boost::math::complement(boost::math::chi_squared_distribution<double>(out.dof), out.statistic));
  return out;
}

double mutual_information(const Eigen::MatrixXd& table) {
  const double n = table.sum();
  if (!(n > 0)) throw Error(ErrorCode::kInvalidArgument, "mutual information of an empty table");
  const Eigen::VectorXd rs = table.rowwise().sum();
  const Eigen::RowVectorXd cs = table.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double v = table(r, c);
      if (v > 0) mi += v / n * std::log(v * n / (rs(r) * cs(c)));
    }
  }
  return std::max(mi, 0.0);
}

Eigen::MatrixXd contingency_table(const Dataset& ds, int feature) {
  const auto& spec = ds.schema().features.at(static_cast<std::size_t>(feature));
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(spec.cardinality(), 2);
  const auto& col = ds.column(static_cast<std::size_t>(feature));
  const auto& y = ds.labels();
  for (std::size_t i = 0; i < y.size(); ++i) t(col[i], y[i]) += 1;
  return t;
}

std::vector<ChiSquareResult> chi_square_scores(const Dataset& ds) {
  std::vector<ChiSquareResult> out;
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    try {
      out.push_back(chi_square_test(contingency_table(ds, static_cast<int>(f))));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
      ChiSquareResult r;
      r.degenerate = true;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<double> mutual_information_scores(const Dataset& ds) {
  std::vector<double> out;
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    out.push_back(mutual_information(contingency_table(ds, static_cast<int>(f))));
  }
  return out;
}

double point_biserial(std::span<const double> x, const Labels& y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "point-biserial inputs differ in length");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) {
    throw Error(ErrorCode::kDegenerate, "correlation undefined for a constant column");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

void BorutaConfig::validate() const {
  if (max_iterations < 20) throw Error(ErrorCode::kInvalidArgument, "boruta max_iterations must be >= 20");
  if (n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "boruta n_trees must be >= 1");
  if (!(significance > 0 && significance < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "boruta significance must lie in (0, 1)");
  }
  if (max_depth < -1 || max_depth == 0) {
    throw Error(ErrorCode::kInvalidArgument, "boruta max_depth must be positive or -1");
  }
}

std::string_view to_string(BorutaDecision d) {
  switch (d) {
    case BorutaDecision::kConfirmed: return "confirmed";
    case BorutaDecision::kRejected: return "rejected";
    case BorutaDecision::kTentative: break;
  }
  return "tentative";
}

BorutaResult boruta(const Eigen::MatrixXd& X, const Labels& y, const BorutaConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(X.cols());
  const auto n = static_cast<std::size_t>(X.rows());
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "boruta needs at least two features");
  if (n < 30) throw Error(ErrorCode::kInvalidArgument, "boruta needs at least 30 rows");
  if (y.size() != n) throw Error(ErrorCode::kInvalidArgument, "label count does not match rows");

  BorutaResult res;
  res.decisions.assign(d, BorutaDecision::kTentative);
  res.hits.assign(d, 0);
  res.trials.assign(d, 0);
  std::vector<double> importance_sum(d, 0.0);
  std::vector<int> rounds_in(d, 0);
  const double threshold = cfg.significance / static_cast<double>(d);

  ojson hp_doc = {{"n_trees", cfg.n_trees}, {"bootstrap", true}};
  if (cfg.max_depth > 0) hp_doc["max_depth"] = cfg.max_depth;
  const HyperParams hp(hp_doc);

  std::vector<std::size_t> perm(n);
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    std::vector<std::size_t> active;
    bool undecided = false;
    for (std::size_t j = 0; j < d; ++j) {
      if (res.decisions[j] != BorutaDecision::kRejected) active.push_back(j);
      if (res.decisions[j] == BorutaDecision::kTentative) undecided = true;
    }
    if (!undecided) break;
    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd aug(X.rows(), 2 * m);
    Rng rng(derive_seed(cfg.seed, "boruta-shadow", static_cast<std::uint64_t>(iter)));
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto col = static_cast<Eigen::Index>(active[static_cast<std::size_t>(k)]);
      aug.col(k) = X.col(col);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      for (std::size_t i = 0; i < n; ++i) {
        aug(static_cast<Eigen::Index>(i), m + k) = X(static_cast<Eigen::Index>(perm[i]), col);
      }
    }
    ForestModel forest;
    FitOptions opts;
    opts.seed = derive_seed(cfg.seed, "boruta-forest", static_cast<std::uint64_t>(iter));
    opts.jobs = cfg.jobs;
    forest.fit(aug, y, hp, opts);
    const Eigen::VectorXd imp = forest.feature_importances();
    const double shadow_max = imp.tail(m).maxCoeff();
    ++res.iterations;

    for (Eigen::Index k = 0; k < m; ++k) {
      const std::size_t j = active[static_cast<std::size_t>(k)];
      importance_sum[j] += imp(k);
      ++rounds_in[j];
      if (res.decisions[j] != BorutaDecision::kTentative) continue;
      ++res.trials[j];
      if (imp(k) > shadow_max) ++res.hits[j];
      const boost::math::binomial_distribution<double> null_dist(res.trials[j], 0.5);
      // P(X >= h); with no hits that is 1.
      const double p_hi =
          res.hits[j] == 0 ? 1.0 : boost::math::cdf(boost::math::complement(null_dist, res.hits[j] - 1.0));
      const double p_lo = boost::math::cdf(null_dist, res.hits[j]);
      const double two_sided = std::min(1.0, 2.0 * std::min(p_hi, p_lo));
      if (two_sided < threshold) {
        res.decisions[j] = p_hi < p_lo ? BorutaDecision::kConfirmed : BorutaDecision::kRejected;
      }
    }
  }
  res.mean_importance.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    res.mean_importance[j] = rounds_in[j] > 0 ? importance_sum[j] / rounds_in[j] : 0.0;
  }
  return res;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::kChiSquare: return "chi_square";
    case SelectionMethod::kMutualInfo: return "mutual_info";
    case SelectionMethod::kPointBiserial: return "point_biserial";
    case SelectionMethod::kBoruta: break;
  }
  return "boruta";
}

const MethodScore& FeatureScoreTable::score(std::size_t feature, SelectionMethod m) const {
  return scores.at(feature * std::size(kAllMethods) + static_cast<std::size_t>(m));
}

FeatureScoreTable consensus(std::vector<std::string> features, std::vector<MethodScore> scores,
                            int top_k, int min_methods,
                            const std::vector<std::string>& forced_includes) {
  constexpr std::size_t kMethods = std::size(kAllMethods);
  if (top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  if (min_methods < 0 || min_methods > static_cast<int>(kMethods)) {
    throw Error(ErrorCode::kInvalidArgument, "min_methods must lie in [0, 4]");
  }
  const std::size_t nf = features.size();
  // Arrange feature-major in method order regardless of input order.
  std::vector<MethodScore> arranged(nf * kMethods);
  std::vector<char> seen(nf * kMethods, 0);
  for (auto& s : scores) {
    const auto it = std::find(features.begin(), features.end(), s.feature);
    if (it == features.end()) throw Error(ErrorCode::kInvalidArgument, "score for unknown feature " + s.feature);
    const std::size_t slot = static_cast<std::size_t>(it - features.begin()) * kMethods +
                             static_cast<std::size_t>(s.method);
    if (seen[slot]) throw Error(ErrorCode::kInvalidArgument, "duplicate score for " + s.feature);
    seen[slot] = 1;
    arranged[slot] = std::move(s);
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCode::kInvalidArgument, "every feature needs a score from all four methods");
  }

  for (std::size_t mi = 0; mi < kMethods; ++mi) {
    const auto method = kAllMethods[mi];
    auto rank_value = [&](std::size_t f) {
      const auto& s = arranged[f * kMethods + mi];
      return method == SelectionMethod::kPointBiserial ? std::fabs(s.raw_score) : s.raw_score;
    };
    if (method == SelectionMethod::kBoruta) {
      for (std::size_t f = 0; f < nf; ++f) {
        auto& s = arranged[f * kMethods + mi];
        if (s.degenerate) s.selected = false;
        s.normalized = s.selected ? 1.0 : 0.0;
      }
      continue;
    }
    double top = 0.0;
    std::vector<std::size_t> order;
    for (std::size_t f = 0; f < nf; ++f) {
      if (arranged[f * kMethods + mi].degenerate) continue;
      order.push_back(f);
      top = std::max(top, rank_value(f));
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rank_value(a) > rank_value(b); });
    for (std::size_t f = 0; f < nf; ++f) {
      auto& s = arranged[f * kMethods + mi];
      s.selected = false;
      s.normalized = (!s.degenerate && top > 0) ? rank_value(f) / top : 0.0;
    }
    for (std::size_t r = 0; r < order.size() && r < static_cast<std::size_t>(top_k); ++r) {
      arranged[order[r] * kMethods + mi].selected = true;
    }
  }

  FeatureScoreTable table;
  table.consensus_count.assign(nf, 0);
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t mi = 0; mi < kMethods; ++mi) table.consensus_count[f] += arranged[f * kMethods + mi].selected;
  }
  for (const auto& name : forced_includes) {
    if (std::find(features.begin(), features.end(), name) == features.end()) {
      throw Error(ErrorCode::kInvalidArgument, "forced include '" + name + "' is not a feature");
    }
  }
  for (std::size_t f = 0; f < nf; ++f) {
    const bool forced =
        std::find(forced_includes.begin(), forced_includes.end(), features[f]) != forced_includes.end();
    if (forced || table.consensus_count[f] >= min_methods) table.final_set.push_back(features[f]);
  }
  table.features = std::move(features);
  table.scores = std::move(arranged);
  return table;
}

FeatureScoreTable score_features(const Dataset& ds, const SelectionConfig& cfg) {
  const auto& schema = ds.schema();
  const std::size_t nf = ds.n_features();
  std::vector<std::string> names;
  for (const auto& f : schema.features) names.push_back(f.name);

  const auto chi = chi_square_scores(ds);
  const auto mi = mutual_information_scores(ds);
  const EncodedMatrix enc = encode(ds);
  const Labels& y = ds.labels();

  // Point-biserial per feature: the encoded column with the largest |r|.
  std::vector<double> pb(nf, 0.0);
  std::vector<char> pb_defined(nf, 0);
  std::vector<double> column(enc.rows());
  for (std::size_t c = 0; c < enc.cols(); ++c) {
    const auto f = static_cast<std::size_t>(enc.column_map[c].feature);
    for (std::size_t i = 0; i < enc.rows(); ++i) {
      column[i] = enc.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
    double r;
    try {
      r = point_biserial(column, y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerate) throw;
      continue;
    }
    if (!pb_defined[f] || std::fabs(r) > std::fabs(pb[f])) pb[f] = r;
    pb_defined[f] = 1;
  }

  const BorutaResult br = boruta(enc.values, y, cfg.boruta);
  std::vector<char> confirmed(nf, 0);
  std::vector<double> boruta_score(nf, 0.0);
  for (std::size_t c = 0; c < enc.cols(); ++c) {
    const auto f = static_cast<std::size_t>(enc.column_map[c].feature);
    if (br.decisions[c] == BorutaDecision::kConfirmed) confirmed[f] = 1;
    boruta_score[f] = std::max(boruta_score[f], br.mean_importance[c]);
  }

  std::vector<MethodScore> scores;
  for (std::size_t f = 0; f < nf; ++f) {
    scores.push_back({names[f], SelectionMethod::kChiSquare, chi[f].statistic, 0, false, chi[f].degenerate});
    scores.push_back({names[f], SelectionMethod::kMutualInfo, mi[f], 0, false, false});
    scores.push_back({names[f], SelectionMethod::kPointBiserial, pb[f], 0, false, !pb_defined[f]});
    scores.push_back({names[f], SelectionMethod::kBoruta, boruta_score[f], 0, confirmed[f] != 0, false});
  }
  std::vector<std::string> forced = cfg.forced_includes;
  for (const auto& name : schema.forced_includes) {
    if (std::find(forced.begin(), forced.end(), name) == forced.end()) forced.push_back(name);
  }
  return consensus(std::move(names), std::move(scores), cfg.top_k, cfg.min_methods, forced);
}

namespace {
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace

void write_feature_scores_csv(std::ostream& out, const FeatureScoreTable& table) {
  out << "feature,method,raw_score,normalized,selected,consensus_count\n";
  for (std::size_t f = 0; f < table.features.size(); ++f) {
    for (auto m : kAllMethods) {
      const auto& s = table.score(f, m);
      out << csv_field(table.features[f]) << ',' << to_string(m) << ',' << fmt(s.raw_score) << ','
          << fmt(s.normalized) << ',' << (s.selected ? 1 : 0) << ',' << table.consensus_count[f]
          << '\n';
    }
  }
}

}  // namespace anemiakit
