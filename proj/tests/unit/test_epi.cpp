#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "anemiakit/epi.hpp"
#include "support.hpp"

using namespace anemiakit;

namespace {

std::vector<ContingencyRow> two_by_two(long a, long b, long c, long d) {
  return {{"f", "ref", c, d, c + d, 0.0}, {"f", "level", a, b, a + b, 0.0}};
}

// Two binary exposures with known log-odds.
Dataset logistic_sample(std::size_t n, double b0, double b1, double b2, std::uint64_t seed) {
  auto schema = std::make_shared<DatasetSchema>();
  schema->label_name = "y";
  schema->features = {{"x1", FeatureKind::kBinary, {"no", "yes"}, "no"},
                      {"x2", FeatureKind::kBinary, {"no", "yes"}, "no"}};
  Rng r(seed);
  std::vector<std::vector<int>> cols(2, std::vector<int>(n));
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    cols[0][i] = r.uniform() < 0.4;
    cols[1][i] = r.uniform() < 0.5;
    y[i] = r.uniform() < sigmoid(b0 + b1 * cols[0][i] + b2 * cols[1][i]);
  }
  return Dataset(schema, cols, y);
}

}  // namespace

TEST_CASE("contingency rows of the survey fixture") {
  const Dataset ds = testsupport::survey_counts();
  const int fever = ds.schema().feature_index("fever");
  const auto rows = contingency(ds, fever);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].category == "Yes");
  CHECK(rows[1].anemic == 230);
  CHECK(rows[1].not_anemic == 250);
  CHECK(rows[1].total == 480);
  CHECK(rows[1].prevalence == doctest::Approx(47.92).epsilon(1e-4));
  const auto mother = contingency(ds, ds.schema().feature_index("mother_anemia"));
  CHECK(mother[1].prevalence == doctest::Approx(51.03).epsilon(1e-4));
}

TEST_CASE("absent levels produce zero rows") {
  auto schema = std::make_shared<DatasetSchema>();
  schema->label_name = "y";
  schema->features = {{"f", FeatureKind::kOneHot, {"a", "b", "c"}, "a"}};
  const Dataset ds(schema, {{0, 0, 1, 1}}, {1, 0, 1, 0});
  const auto rows = contingency(ds, 0);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].total == 0);
  CHECK(std::isnan(rows[2].prevalence));
  const auto ors = crude_or(rows, "a");
  CHECK(!ors[2].defined);
}

TEST_CASE("crude odds ratios") {
  CHECK(crude_or(two_by_two(322, 309, 448, 776), "ref")[1].value == doctest::Approx(1.805).epsilon(1e-3));
  CHECK(crude_or(two_by_two(539, 946, 231, 139), "ref")[1].value == doctest::Approx(0.343).epsilon(1e-3));
  CHECK(crude_or(two_by_two(10, 20, 10, 20), "ref")[1].value == doctest::Approx(1.0));
  CHECK(crude_or(two_by_two(10, 20, 10, 20), "ref")[0].value == 1.0);
  const auto zero = crude_or(two_by_two(0, 20, 10, 20), "ref");
  CHECK(!zero[1].defined);
  const auto fixed = crude_or(two_by_two(0, 20, 10, 20), "ref", true);
  CHECK(fixed[1].defined);
  CHECK(fixed[1].corrected);
  CHECK(fixed[1].value == doctest::Approx((0.5 * 20.5) / (20.5 * 10.5)));
  CHECK_THROWS_AS(crude_or(two_by_two(1, 2, 3, 4), "missing"), Error);
  CHECK_THROWS_AS(crude_or(two_by_two(1, 2, 0, 4), "ref"), Error);
}

TEST_CASE("wald intervals") {
  const auto ci = wald_ci(0.0, 0.1);
  CHECK(ci.low == doctest::Approx(0.822).epsilon(1e-3));
  CHECK(ci.high == doctest::Approx(1.217).epsilon(1e-3));
  const auto tight = wald_ci(0.4, 1e-12);
  CHECK(tight.low == doctest::Approx(std::exp(0.4)));
  CHECK(tight.high == doctest::Approx(std::exp(0.4)));
  Rng r(1);
  for (int t = 0; t < 100; ++t) {
    const double b = r.normal(), se = 0.01 + r.uniform();
    const auto w = wald_ci(b, se, 0.9);
    CHECK(w.low <= std::exp(b));
    CHECK(w.high >= std::exp(b));
  }
  CHECK(wald_p_value(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(wald_p_value(1.959964, 1.0) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(wald_ci(0.3, 0.0).low == doctest::Approx(std::exp(0.3)));
  CHECK_THROWS_AS(wald_ci(0.0, -0.1), Error);
}

TEST_CASE("adjusted odds ratios recover the generating model") {
  // A single n=20000 draw has an OR-scale standard error near 3%, so the 5%
  // bound is asserted on the mean over replications; each draw must stay
  // within 4 standard errors.
  double sum1 = 0, sum2 = 0;
  const int reps = 10;
  for (int s = 0; s < reps; ++s) {
    const auto rows = adjusted_or(logistic_sample(20000, -0.5, 0.7, -0.4, 30 + s));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].reference);
    CHECK(std::isnan(rows[0].adjusted_or));
    CHECK(std::abs(rows[1].beta - 0.7) < 4 * rows[1].se);
    CHECK(std::abs(rows[3].beta + 0.4) < 4 * rows[3].se);
    CHECK(rows[1].ci_low < rows[1].adjusted_or);
    CHECK(rows[1].ci_high > rows[1].adjusted_or);
    sum1 += rows[1].beta;
    sum2 += rows[3].beta;
  }
  CHECK(std::abs(std::exp(sum1 / reps) / std::exp(0.7) - 1) < 0.05);
  CHECK(std::abs(std::exp(sum2 / reps) / std::exp(-0.4) - 1) < 0.05);
}

TEST_CASE("single covariate adjusted OR equals the crude OR") {
  const Dataset ds = logistic_sample(3000, 0.1, 0.8, 0.0, 4);
  AdjustedOptions opt;
  opt.features = {0};
  const auto rows = adjusted_or(ds, opt);
  const auto crude = crude_or(contingency(ds, 0), "no");
  CHECK(rows[1].adjusted_or == doctest::Approx(crude[1].value).epsilon(1e-8));
}

TEST_CASE("switching the reference level inverts the odds ratio") {
  const Dataset ds = logistic_sample(5000, 0.0, 0.6, -0.3, 5);
  const auto base = adjusted_or(ds);
  AdjustedOptions flip;
  flip.references = {{"x1", "yes"}};
  const auto rows = adjusted_or(ds, flip);
  // x1=no is now the non-reference row.
  CHECK(rows[0].adjusted_or == doctest::Approx(1.0 / base[1].adjusted_or).epsilon(1e-6));
  CHECK(rows[0].beta == doctest::Approx(-base[1].beta).epsilon(1e-6));
  CHECK(rows[3].adjusted_or == doctest::Approx(base[3].adjusted_or).epsilon(1e-6));
}

TEST_CASE("null covariate p-values look uniform") {
  int below = 0;
  for (int s = 0; s < 200; ++s) {
    const auto rows = adjusted_or(logistic_sample(500, -0.2, 0.0, 0.5, 100 + s));
    below += rows[1].p_value < 0.05;
    CHECK(std::abs(std::log(rows[1].adjusted_or)) < 1.0);
  }
  // Binomial(200, 0.05): mean 10, sd about 3.1.
  CHECK(below <= 22);
}

TEST_CASE("separation names the column") {
  auto schema = std::make_shared<DatasetSchema>();
  schema->label_name = "y";
  schema->features = {{"f", FeatureKind::kBinary, {"no", "yes"}, "no"}};
  const Dataset ds(schema, {{0, 0, 0, 1, 1, 1}}, {0, 1, 0, 1, 1, 1});
  try {
    adjusted_or(ds);
    FAIL("expected separation");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("f=yes") != std::string::npos);
  }
}

TEST_CASE("factors csv layout") {
  const Dataset ds = testsupport::survey_counts();
  std::ostringstream out;
  write_factors_csv(out, factor_table(ds));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "feature,category,anemic,not_anemic,total,prevalence_pct,crude_or,adj_or,ci_low,ci_high,p");
  std::getline(in, line);
  CHECK(line == "child_age,6-12,125,41,166,75.30,1.00,,,,");
  std::getline(in, line);
  CHECK(line.rfind("child_age,13-24,213,134,347,61.38,0.52,", 0) == 0);
}
