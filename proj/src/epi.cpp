#include "anemiakit/epi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <boost/math/distributions/normal.hpp>

namespace anemiakit {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<ContingencyRow> contingency(const Dataset& ds, int feature) {
  const auto& spec = ds.schema().features.at(static_cast<std::size_t>(feature));
  std::vector<ContingencyRow> rows(spec.levels.size());
  for (std::size_t l = 0; l < rows.size(); ++l) {
    rows[l].feature = spec.name;
    rows[l].category = spec.levels[l];
  }
  const auto& col = ds.column(static_cast<std::size_t>(feature));
  const auto& y = ds.labels();
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto& r = rows[static_cast<std::size_t>(col[i])];
    (y[i] == 1 ? r.anemic : r.not_anemic) += 1;
  }
  for (auto& r : rows) {
    r.total = r.anemic + r.not_anemic;
    r.prevalence = r.total > 0 ? 100.0 * static_cast<double>(r.anemic) / static_cast<double>(r.total) : kNaN;
  }
  return rows;
}

std::vector<CrudeOdds> crude_or(const std::vector<ContingencyRow>& rows, const std::string& reference,
                                bool haldane) {
  const auto ref = std::find_if(rows.begin(), rows.end(),
                                [&](const ContingencyRow& r) { return r.category == reference; });
  if (ref == rows.end()) throw Error(ErrorCode::kInvalidArgument, "reference level '" + reference + "' not found");
  if (!haldane && (ref->anemic == 0 || ref->not_anemic == 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "reference level '" + reference + "' needs non-zero counts in both outcomes");
  }
  std::vector<CrudeOdds> out;
  for (const auto& r : rows) {
    CrudeOdds o;
    if (&r == &*ref) {
      out.push_back(o);
      continue;
    }
    double a = static_cast<double>(r.anemic), b = static_cast<double>(r.not_anemic);
    double c = static_cast<double>(ref->anemic), d = static_cast<double>(ref->not_anemic);
    if (a == 0 || b == 0 || c == 0 || d == 0) {
      if (haldane) {
        a += 0.5;
        b += 0.5;
        c += 0.5;
        d += 0.5;
        o.corrected = true;
      } else {
        o.defined = false;
        o.value = kNaN;
        out.push_back(o);
        continue;
      }
    }
    o.value = (a * d) / (b * c);
    out.push_back(o);
  }
  return out;
}

WaldInterval wald_ci(double beta, double se, double level) {
  if (!(se >= 0) || !std::isfinite(se)) throw Error(ErrorCode::kInvalidArgument, "standard error must be >= 0");
  if (!(level > 0 && level < 1)) throw Error(ErrorCode::kInvalidArgument, "level must lie in (0, 1)");
  const double z = level == 0.95 ? kZ975
                                 : boost::math::quantile(boost::math::normal_distribution<double>(),
                                                         0.5 + level / 2.0);
  return {std::exp(beta - z * se), std::exp(beta + z * se)};
}

double wald_p_value(double beta, double se) {
  if (!(se > 0)) throw Error(ErrorCode::kInvalidArgument, "standard error must be > 0");
  const double z = std::fabs(beta / se);
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(), z));
}

Dataset with_references(const Dataset& ds, const std::map<std::string, std::string>& references) {
  if (references.empty()) return ds;
  auto schema = std::make_shared<DatasetSchema>(ds.schema());
  for (const auto& [name, level] : references) {
    const int f = schema->feature_index(name);
    if (f < 0) throw Error(ErrorCode::kInvalidArgument, "unknown feature '" + name + "'");
    auto& spec = schema->features[static_cast<std::size_t>(f)];
    if (spec.level_index(level) < 0) {
      throw Error(ErrorCode::kInvalidArgument, "'" + level + "' is not a level of " + name);
    }
    spec.reference_level = level;
  }
  std::vector<std::vector<int>> cols;
  for (std::size_t f = 0; f < ds.n_features(); ++f) cols.push_back(ds.column(f));
  return Dataset(std::move(schema), std::move(cols), ds.labels());
}

std::vector<OddsRatioRow> adjusted_or(const Dataset& source, const AdjustedOptions& options) {
  const Dataset ds = with_references(source, options.references);
  const auto& schema = ds.schema();
  std::vector<int> features = options.features;
  if (features.empty()) {
    for (std::size_t f = 0; f < ds.n_features(); ++f) features.push_back(static_cast<int>(f));
  }
  const EncodedMatrix design = encode_treatment(ds, features);
  LogisticFit fit;
  try {
    fit = fit_logistic_irls(design.values, ds.labels(), 0.0);
  } catch (const SeparationError& e) {
    const auto& name = design.column_map.at(static_cast<std::size_t>(e.column())).name;
    throw SeparationError(e.column(), "adjusted model does not converge: separation at column '" + name +
                                          "' (check sparse categories)");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerate) {
      throw Error(ErrorCode::kDegenerate,
                  std::string("adjusted model design is rank deficient: ") + e.what());
    }
    throw;
  }

  std::vector<OddsRatioRow> out;
  for (int f : features) {
    const auto& spec = schema.features.at(static_cast<std::size_t>(f));
    for (std::size_t l = 0; l < spec.levels.size(); ++l) {
      OddsRatioRow row;
      row.feature = spec.name;
      row.category = spec.levels[l];
      const auto col = std::find_if(design.column_map.begin(), design.column_map.end(), [&](const ColumnOrigin& c) {
        return c.feature == f && c.level == static_cast<int>(l);
      });
      if (col == design.column_map.end()) {
        row.reference = true;
        row.beta = row.se = row.adjusted_or = row.ci_low = row.ci_high = row.p_value = kNaN;
      } else {
        const auto j = static_cast<Eigen::Index>(col - design.column_map.begin());
        row.beta = fit.coefficients(j);
        row.se = std::sqrt(fit.covariance(j + 1, j + 1));
        row.adjusted_or = std::exp(row.beta);
        const WaldInterval ci = wald_ci(row.beta, row.se);
        row.ci_low = ci.low;
        row.ci_high = ci.high;
        row.p_value = wald_p_value(row.beta, row.se);
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<FactorRow> factor_table(const Dataset& source, const AdjustedOptions& options, bool haldane) {
  const Dataset ds = with_references(source, options.references);
  AdjustedOptions adj = options;
  adj.references.clear();
  const auto adjusted = adjusted_or(ds, adj);
  std::vector<FactorRow> out;
  std::size_t k = 0;
  std::vector<int> features = options.features;
  if (features.empty()) {
    for (std::size_t f = 0; f < ds.n_features(); ++f) features.push_back(static_cast<int>(f));
  }
  for (int f : features) {
    const auto rows = contingency(ds, f);
    const auto crude = crude_or(rows, ds.schema().features[static_cast<std::size_t>(f)].reference_level, haldane);
    for (std::size_t l = 0; l < rows.size(); ++l) {
      FactorRow fr{rows[l], adjusted.at(k++)};
      fr.odds.crude = crude[l];
      out.push_back(std::move(fr));
    }
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_factors_csv(std::ostream& out, const std::vector<FactorRow>& rows) {
  out << "feature,category,anemic,not_anemic,total,prevalence_pct,crude_or,adj_or,ci_low,ci_high,p\n";
  for (const auto& r : rows) {
    const auto& c = r.counts;
    out << csv_field(c.feature) << ',' << csv_field(c.category) << ',' << c.anemic << ',' << c.not_anemic
        << ',' << c.total << ',' << fixed(c.prevalence, 2) << ',';
    if (r.odds.reference) {
      out << "1.00,,,,\n";
      continue;
    }
    out << (r.odds.crude.defined ? fixed(r.odds.crude.value, 2) : "NA") << ',' << fixed(r.odds.adjusted_or, 2)
        << ',' << fixed(r.odds.ci_low, 3) << ',' << fixed(r.odds.ci_high, 3) << ',';
    if (std::isfinite(r.odds.p_value) && r.odds.p_value < 0.001) {
      out << "<0.001";
    } else {
      out << fixed(r.odds.p_value, 3);
    }
    out << '\n';
  }
}

}  // namespace anemiakit
