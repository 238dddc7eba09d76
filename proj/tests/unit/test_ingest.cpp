#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "anemiakit/ingest.hpp"
#include "support.hpp"

using namespace anemiakit;

namespace {

std::shared_ptr<DatasetSchema> small_schema() {
  auto s = std::make_shared<DatasetSchema>();
  s->label_name = "anemia";
  FeatureSpec age{"age", FeatureKind::kOrdinal, {"6-12", "13-24", "25-36", "37-48", "49-59"}, "6-12"};
  FeatureSpec fever{"fever", FeatureKind::kBinary, {"no", "yes"}, "no"};
  FeatureSpec province{"province", FeatureKind::kOneHot,
                       {"madhesh", "bagmati", "gandaki", "karnali", "koshi", "lumbini", "sudurpashchim"},
                       "madhesh"};
  s->features = {age, fever, province};
  return s;
}

}  // namespace

TEST_CASE("hemoglobin cut-offs") {
  CHECK(label_from_hemoglobin(11.0) == 0);
  CHECK(label_from_hemoglobin(10.5) == 1);
  CHECK(label_from_hemoglobin(6.9) == 1);
  CHECK(label_from_hemoglobin(14.0) == 0);
}

TEST_CASE("hemoglobin labelling is monotone non-increasing") {
  int prev = 1;
  for (double hb = 3.0; hb <= 18.0; hb += 0.01) {
    const int l = label_from_hemoglobin(hb);
    CHECK(l <= prev);
    prev = l;
  }
}

TEST_CASE("invalid hemoglobin is rejected") {
  CHECK_THROWS_AS(label_from_hemoglobin(std::numeric_limits<double>::quiet_NaN()), Error);
  CHECK_THROWS_AS(label_from_hemoglobin(-1.0), Error);
}

TEST_CASE("nutrition status uses a closed band") {
  const std::vector<double> zeros{0.0, 0.0, 0.0}, low{-2.1, 0.5}, edge{-2.0, 2.0};
  CHECK(derive_nutrition_status(zeros) == NutritionStatus::kNourished);
  CHECK(derive_nutrition_status(low) == NutritionStatus::kMalnourished);
  CHECK(derive_nutrition_status(edge) == NutritionStatus::kNourished);
  const std::vector<double> none{std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(derive_nutrition_status(none), Error);
}

TEST_CASE("median imputation caps first and takes the lower middle") {
  FeatureSpec anc{"anc", FeatureKind::kOrdinal, {}, ""};
  for (int v = 0; v <= 10; ++v) anc.levels.push_back(std::to_string(v));
  anc.reference_level = "0";
  anc.impute = ImputeRule::kMedian;
  anc.cap = 10;
  const RawColumn col{"2", "4", "15", std::nullopt};
  const auto out = impute_column(col, anc);
  CHECK(out == std::vector<std::string>{"2", "4", "10", "4"});

  // Idempotent once complete.
  RawColumn again;
  for (const auto& s : out) again.emplace_back(s);
  CHECK(impute_column(again, anc) == out);
}

TEST_CASE("mode imputation and identity on complete columns") {
  FeatureSpec b{"b", FeatureKind::kBinary, {"no", "yes"}, "no"};
  b.impute = ImputeRule::kMode;
  const RawColumn col{"yes", "yes", "no", std::nullopt};
  CHECK(impute_column(col, b) == std::vector<std::string>{"yes", "yes", "no", "yes"});
  const RawColumn full{"no", "yes", "no"};
  CHECK(impute_column(full, b) == std::vector<std::string>{"no", "yes", "no"});
}

TEST_CASE("encoding rules") {
  auto schema = small_schema();
  std::istringstream csv(
      "age,fever,province,anemia\n"
      "25-36,yes,madhesh,1\n"
      "6-12,no,koshi,0\n"
      "49-59,yes,sudurpashchim,1\n");
  const Dataset ds = read_dataset_csv(csv, schema);
  const EncodedMatrix m = encode(ds);
  REQUIRE(m.cols() == 1 + 1 + 6);
  CHECK(m.values(0, 0) == 2.0);  // third ordinal level
  CHECK(m.values(0, 1) == 1.0);
  CHECK(m.values(1, 1) == 0.0);
  // Reference province has no indicator set.
  CHECK(m.values.row(0).tail(6).sum() == 0.0);
  CHECK(m.values.row(1).tail(6).sum() == 1.0);
  CHECK(m.cardinalities(*schema) == std::vector<int>{5, 2, 2, 2, 2, 2, 2, 2});
}

TEST_CASE("encoding round-trips and one-hot partitions on the demo data") {
  const Dataset ds = testsupport::demo_data();
  const EncodedMatrix m = encode(ds);
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    const auto codes = decode_row(m, i, ds.schema());
    REQUIRE(codes.size() == ds.n_features());
    for (std::size_t f = 0; f < ds.n_features(); ++f) CHECK(codes[f] == ds.code(i, f));
  }
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double v = m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      CHECK(v == std::floor(v));
    }
  }
  // Per one-hot feature: indicator sum is 1 unless the row is at the reference.
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    const auto& spec = ds.schema().features[f];
    if (spec.kind != FeatureKind::kOneHot) continue;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double sum = 0;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (m.column_map[c].feature == static_cast<int>(f)) sum += m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      }
      const bool at_ref = ds.code(i, f) == spec.reference_index();
      CHECK(sum == (at_ref ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("treatment coding expands ordinal features") {
  const Dataset ds = testsupport::demo_data();
  const EncodedMatrix t = encode_treatment(ds);
  std::size_t expected = 0;
  for (const auto& f : ds.schema().features) expected += f.levels.size() - 1;
  CHECK(t.cols() == expected);
}

TEST_CASE("csv loading drops missing labels and rejects unknown levels") {
  auto schema = small_schema();
  std::istringstream csv(
      "age,fever,province,anemia\n"
      "25-36,yes,madhesh,NA\n"
      "6-12,no,koshi,0\n");
  LoadReport rep;
  const Dataset ds = read_dataset_csv(csv, schema, &rep);
  CHECK(ds.n_rows() == 1);
  CHECK(rep.rows_dropped_missing_label == 1);

  std::istringstream bad("age,fever,province,anemia\n25-36,maybe,madhesh,1\n");
  CHECK_THROWS_AS(read_dataset_csv(bad, schema), Error);
  std::istringstream missing_col("age,fever,anemia\n25-36,yes,1\n");
  CHECK_THROWS_AS(read_dataset_csv(missing_col, schema), Error);
}

TEST_CASE("hemoglobin labels are derived from the schema thresholds") {
  auto schema = small_schema();
  schema->label_name = "hb";
  schema->label_kind = LabelKind::kHemoglobin;
  std::istringstream csv("age,fever,province,hb\n25-36,yes,madhesh,11.0\n6-12,no,koshi,10.9\n");
  const Dataset ds = read_dataset_csv(csv, schema);
  CHECK(ds.labels() == Labels{0, 1});
}

TEST_CASE("csv parser handles quotes and CRLF") {
  std::istringstream in("a,\"b,c\",\"d\"\"e\"\r\n1,2,3\r\n");
  const auto rows = parse_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][1] == "b,c");
  CHECK(rows[0][2] == "d\"e");
  CHECK(rows[1][2] == "3");
}

TEST_CASE("stratified split sizes") {
  Labels y(1855, 0);
  std::fill(y.begin(), y.begin() + 770, 1);
  const SplitPlan p = stratified_split(y, 0.2, 11);
  long pos = 0;
  for (auto i : p.test_indices) pos += y[i];
  CHECK(p.test_indices.size() == 371);
  CHECK(pos == 154);
  CHECK(p.train_indices.size() + p.test_indices.size() == 1855);

  Labels ten{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  const SplitPlan q = stratified_split(ten, 0.2, 3);
  REQUIRE(q.test_indices.size() == 2);
  CHECK(ten[q.test_indices[0]] + ten[q.test_indices[1]] == 1);

  const SplitPlan again = stratified_split(y, 0.2, 11);
  CHECK(again.test_indices == p.test_indices);
  CHECK(again.train_indices == p.train_indices);
}

TEST_CASE("stratification bound over random class sizes") {
  Rng r(77);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n0 = 2 + r.below(300), n1 = 2 + r.below(300);
    Labels y(n0 + n1, 0);
    std::fill(y.begin(), y.begin() + static_cast<long>(n1), 1);
    const double frac = 0.05 + 0.9 * r.uniform();
    const SplitPlan p = stratified_split(y, frac, t);
    double pos = 0;
    for (auto i : p.test_indices) pos += y[i];
    const double neg = static_cast<double>(p.test_indices.size()) - pos;
    CHECK(std::abs(pos / n1 - frac) <= 1.0 / n1 + 1e-12);
    CHECK(std::abs(neg / n0 - frac) <= 1.0 / n0 + 1e-12);
  }
}

TEST_CASE("schema json round trip") {
  const DatasetSchema s = load_schema(testsupport::demo("schema.json"));
  const DatasetSchema back = DatasetSchema::from_json(nlohmann::json::parse(s.to_json().dump()));
  CHECK(back.to_json() == s.to_json());
}
