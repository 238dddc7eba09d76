#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "anemiakit/pipeline.hpp"
#include "anemiakit/synth.hpp"
#include "support.hpp"

using namespace anemiakit;
namespace fs = std::filesystem;

namespace {

PipelineConfig lr_only(const fs::path& out) {
  nlohmann::json doc = {{"data_path", testsupport::demo("data.csv").string()},
                        {"schema_path", testsupport::demo("schema.json").string()},
                        {"output_dir", out.string()},
                        {"seed", 11},
                        {"cv", {{"n_folds", 3}, {"n_repeats", 1}}},
                        {"selection", {{"boruta", {{"max_iterations", 20}, {"n_trees", 20}}}}},
                        {"models", {"LR", {{"name", "NB"}, {"grid", {{"alpha", {1.0}}}}}}}};
  return PipelineConfig::from_json(doc);
}

std::string header_of(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("config parsing") {
  nlohmann::json ok = {{"data_path", "d.csv"}, {"schema_path", "s.json"}, {"output_dir", "out"}, {"seed", 1}};
  const auto cfg = PipelineConfig::from_json(ok, "/base");
  CHECK(cfg.data_path == fs::path("/base/d.csv"));
  CHECK(cfg.models.size() == 9);
  CHECK(cfg.n_folds == 5);
  CHECK(cfg.n_repeats == 3);

  auto no_seed = ok;
  no_seed.erase("seed");
  CHECK_THROWS_AS(PipelineConfig::from_json(no_seed), Error);
  auto unknown = ok;
  unknown["colour"] = "blue";
  CHECK_THROWS_AS(PipelineConfig::from_json(unknown), Error);
  auto bad_model = ok;
  bad_model["models"] = {"LR", "GPT"};
  CHECK_THROWS_AS(PipelineConfig::from_json(bad_model), Error);
}

TEST_CASE("config hash tracks every field") {
  nlohmann::json base = {{"data_path", "d.csv"}, {"schema_path", "s.json"}, {"output_dir", "out"}, {"seed", 1}};
  const std::string h = PipelineConfig::from_json(base).hash();
  CHECK(h.size() == 16);
  CHECK(PipelineConfig::from_json(base).hash() == h);
  std::vector<nlohmann::json> variants;
  auto v = base;
  v["seed"] = 2;
  variants.push_back(v);
  v = base;
  v["test_frac"] = 0.25;
  variants.push_back(v);
  v = base;
  v["smote"] = {{"k_neighbors", 3}};
  variants.push_back(v);
  v = base;
  v["selection"] = {{"top_k", 10}};
  variants.push_back(v);
  v = base;
  v["models"] = {"LR"};
  variants.push_back(v);
  v = base;
  v["cv"] = {{"n_repeats", 2}};
  variants.push_back(v);
  v = base;
  v["output_dir"] = "elsewhere";
  variants.push_back(v);
  for (const auto& var : variants) CHECK(PipelineConfig::from_json(var).hash() != h);
}

TEST_CASE("small pipeline run writes the reports and is reproducible") {
  const fs::path a = testsupport::scratch("pipe_a"), b = testsupport::scratch("pipe_b");
  const RunResult ra = run_pipeline(lr_only(a / "out"));
  REQUIRE(ra.ok);
  PipelineConfig cb = lr_only(a / "out");
  RunOptions ob;
  ob.output_dir = b / "out";
  const RunResult rb = run_pipeline(cb, ob);
  REQUIRE(rb.ok);

  CHECK(header_of(a / "out/model_performance.csv") == "metric,LR,NB");
  CHECK(header_of(a / "out/factors.csv") ==
        "feature,category,anemic,not_anemic,total,prevalence_pct,crude_or,adj_or,ci_low,ci_high,p");
  for (const char* f : {"feature_scores.csv", "cv_results.csv", "roc_LR.csv", "pr_LR.csv", "model_LR.json",
                        "roc_NB.csv", "pr_NB.csv", "model_NB.json", "manifest.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(a / "out" / f));
  }
  for (const auto& entry : fs::directory_iterator(a / "out")) {
    CAPTURE(entry.path());
    CHECK(testsupport::slurp(entry.path()) == testsupport::slurp(b / "out" / entry.path().filename()));
  }
  const auto manifest = nlohmann::json::parse(testsupport::slurp(a / "out/manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["models"]["LR"]["leakage_audit"]["synthetic_rows_in_validation"] == 0);
  CHECK(manifest["rows"]["kept"] == 2000);
  CHECK(!manifest.contains("timings_seconds"));
}

TEST_CASE("a failing stage removes partial outputs and records the stage") {
  const fs::path dir = testsupport::scratch("pipe_fail");
  PipelineConfig cfg = lr_only(dir / "out");
  cfg.smote.k_neighbors = 5000;  // more neighbours than minority rows
  const RunResult r = run_pipeline(cfg);
  CHECK(!r.ok);
  CHECK(r.failed_stage == "model:LR");
  CHECK(r.error_code == ErrorCode::kInfeasible);
  CHECK(!fs::exists(dir / "out/feature_scores.csv"));
  const auto manifest = nlohmann::json::parse(testsupport::slurp(dir / "out/manifest.json"));
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["failed_stage"] == "model:LR");

  RunOptions keep;
  keep.keep_going = true;
  // The only model fails, so the error is recorded and the report stage gives up.
  const RunResult k = run_pipeline(cfg, keep);
  CHECK(!k.ok);
  CHECK(k.failed_stage == "report");
  CHECK(k.error_code == ErrorCode::kSearchFailure);
  CHECK(k.manifest["models"]["LR"]["status"] == "failed");
  CHECK(k.manifest["models"]["LR"]["error_code"] == error_code_name(ErrorCode::kInfeasible));
}

TEST_CASE("generator spec validation") {
  nlohmann::json spec = {{"n_rows", 100},
                         {"features", {{{"name", "f"}, {"kind", "binary"}, {"levels", {"no", "yes"}},
                                        {"reference_level", "no"}, {"probabilities", {0.5, 0.6}}}}}};
  CHECK_THROWS_AS(SyntheticSpec::from_json(spec), Error);
}

TEST_CASE("null generator gives the base rate") {
  nlohmann::json spec = {{"n_rows", 20000},
                         {"intercept", std::log(0.3 / 0.7)},
                         {"features", {{{"name", "f"}, {"kind", "binary"}, {"levels", {"no", "yes"}},
                                        {"reference_level", "no"}}}}};
  const auto s = sample_synthetic(SyntheticSpec::from_json(spec), 5);
  double pos = 0;
  for (int v : s.data.labels()) pos += v;
  const double sd = std::sqrt(0.3 * 0.7 / 20000);
  CHECK(std::abs(pos / 20000 - 0.3) < 2 * sd);
}

TEST_CASE("generator output is reproducible") {
  const auto spec = load_synthetic_spec(testsupport::demo("synth_spec.json"));
  const fs::path a = testsupport::scratch("synth_a"), b = testsupport::scratch("synth_b");
  generate_synthetic(spec, 3, a);
  generate_synthetic(spec, 3, b);
  for (const char* f : {"data.csv", "schema.json", "truth.json"}) {
    CHECK(testsupport::slurp(a / f) == testsupport::slurp(b / f));
  }
  const auto truth = nlohmann::json::parse(testsupport::slurp(a / "truth.json"));
  CHECK(truth["n_rows"] == 2000);
  CHECK(truth["model_coefficients"]["child_age"] == doctest::Approx(-0.5));
}
