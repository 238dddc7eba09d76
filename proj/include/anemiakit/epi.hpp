#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "anemiakit/ingest.hpp"
#include "anemiakit/learners.hpp"

namespace anemiakit {

struct ContingencyRow {
  std::string feature;
  std::string category;
  long anemic = 0;
  long not_anemic = 0;
  long total = 0;
  // Percent; NaN for an empty level.
  double prevalence = 0.0;
};

/// Per-level counts in level order, zero rows included.
std::vector<ContingencyRow> contingency(const Dataset& ds, int feature);

struct CrudeOdds {
  double value = 1.0;
  bool defined = true;
  // Haldane-Anscombe 0.5 added to every cell of this 2x2 table.
  bool corrected = false;
};

/// (a_level d_ref) / (b_level c_ref) for every row. A zero cell leaves the
/// ratio undefined unless `haldane` is set. Throws kInvalidArgument when the
/// reference is absent or has a zero outcome count.
std::vector<CrudeOdds> crude_or(const std::vector<ContingencyRow>& rows, const std::string& reference,
                                bool haldane = false);

inline constexpr double kZ975 = 1.959964;

struct WaldInterval {
  double low;
  double high;
};

/// exp(beta +- z se), z the two-sided normal quantile for `level`.
WaldInterval wald_ci(double beta, double se, double level = 0.95);

/// Two-sided normal p-value of beta / se.
double wald_p_value(double beta, double se);

struct OddsRatioRow {
  std::string feature;
  std::string category;
  bool reference = false;
  CrudeOdds crude;
  // Adjusted fields are NaN on reference rows.
  double beta = 0.0;
  double se = 0.0;
  double adjusted_or = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 0.0;
};

struct AdjustedOptions {
  // Feature indices to include (all when empty).
  std::vector<int> features;
  // feature name -> reference level overriding the schema.
  std::map<std::string, std::string> references;
};

/// Unpenalized multivariable logistic regression on treatment-coded
/// features. Returns rows for every level of every included feature (crude
/// fields left default). Separation names the offending column (kDiverged);
/// a singular information matrix raises kDegenerate.
std::vector<OddsRatioRow> adjusted_or(const Dataset& ds, const AdjustedOptions& options = {});

struct FactorRow {
  ContingencyRow counts;
  OddsRatioRow odds;
};

/// Table-2 style factors: counts, crude and adjusted ORs for every feature.
std::vector<FactorRow> factor_table(const Dataset& ds, const AdjustedOptions& options = {},
                                    bool haldane = false);

/// Columns: feature, category, anemic, not_anemic, total, prevalence_pct,
/// crude_or, adj_or, ci_low, ci_high, p.
void write_factors_csv(std::ostream& out, const std::vector<FactorRow>& rows);

/// Rebinds the dataset to a schema whose reference levels are overridden.
Dataset with_references(const Dataset& ds, const std::map<std::string, std::string>& references);

}  // namespace anemiakit
