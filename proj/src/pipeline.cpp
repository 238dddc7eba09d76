#include "anemiakit/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "anemiakit/epi.hpp"
#include "anemiakit/eval.hpp"
#include "anemiakit/ingest.hpp"

namespace anemiakit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::kInvalidArgument, where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::kInvalidArgument, "unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& doc, const fs::path& base_dir) {
  reject_unknown(doc,
                 {"data_path", "schema_path", "output_dir", "seed", "test_frac", "smote", "selection", "cv",
                  "models"},
                 "config");
  PipelineConfig cfg;
  try {
    cfg.data_path = resolve(base_dir, doc.at("data_path").get<std::string>());
    cfg.schema_path = resolve(base_dir, doc.at("schema_path").get<std::string>());
    cfg.output_dir = resolve(base_dir, doc.value("output_dir", std::string("output")));
    if (!doc.contains("seed")) throw Error(ErrorCode::kInvalidArgument, "config needs a seed");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.test_frac = doc.value("test_frac", 0.2);
    if (doc.contains("smote")) {
      const auto& s = doc["smote"];
      reject_unknown(s, {"enabled", "k_neighbors", "target_ratio"}, "smote");
      cfg.smote_enabled = s.value("enabled", true);
      cfg.smote.k_neighbors = s.value("k_neighbors", cfg.smote.k_neighbors);
      cfg.smote.target_ratio = s.value("target_ratio", cfg.smote.target_ratio);
    }
    if (doc.contains("selection")) {
      const auto& s = doc["selection"];
      reject_unknown(s, {"top_k", "min_methods", "forced_includes", "boruta"}, "selection");
      cfg.selection.top_k = s.value("top_k", cfg.selection.top_k);
      cfg.selection.min_methods = s.value("min_methods", cfg.selection.min_methods);
      cfg.selection.forced_includes = s.value("forced_includes", std::vector<std::string>{});
      if (s.contains("boruta")) {
        const auto& b = s["boruta"];
        reject_unknown(b, {"max_iterations", "n_trees", "significance", "max_depth"}, "boruta");
        auto& bc = cfg.selection.boruta;
        bc.max_iterations = b.value("max_iterations", bc.max_iterations);
        bc.n_trees = b.value("n_trees", bc.n_trees);
        bc.significance = b.value("significance", bc.significance);
        bc.max_depth = b.value("max_depth", bc.max_depth);
      }
    }
    if (doc.contains("cv")) {
      const auto& c = doc["cv"];
      reject_unknown(c, {"n_folds", "n_repeats"}, "cv");
      cfg.n_folds = c.value("n_folds", cfg.n_folds);
      cfg.n_repeats = c.value("n_repeats", cfg.n_repeats);
    }
    if (doc.contains("models")) {
      for (const auto& m : doc["models"]) {
        ModelSpec spec;
        std::string name;
        if (m.is_string()) {
          name = m.get<std::string>();
        } else {
          reject_unknown(m, {"name", "grid"}, "model entry");
          name = m.at("name").get<std::string>();
          if (m.contains("grid")) {
            if (!m["grid"].is_object()) throw Error(ErrorCode::kInvalidArgument, "model grid must be an object");
            spec.grid = ojson::parse(m["grid"].dump());
          }
        }
        const auto id = parse_learner(name);
        if (!id) throw Error(ErrorCode::kInvalidArgument, "unknown model id '" + name + "'");
        spec.id = *id;
        cfg.models.push_back(std::move(spec));
      }
    } else {
      for (auto id : kAllLearners) cfg.models.push_back({id, std::nullopt});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void PipelineConfig::validate() const {
  if (!(test_frac > 0 && test_frac < 1)) throw Error(ErrorCode::kInvalidArgument, "test_frac must lie in (0, 1)");
  smote.validate();
  selection.boruta.validate();
  if (selection.top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  if (selection.min_methods < 0 || selection.min_methods > 4) {
    throw Error(ErrorCode::kInvalidArgument, "min_methods must lie in [0, 4]");
  }
  if (n_folds < 2 || n_repeats < 1) throw Error(ErrorCode::kInvalidArgument, "cv needs n_folds >= 2 and n_repeats >= 1");
  if (models.empty()) throw Error(ErrorCode::kInvalidArgument, "no models selected");
  std::set<LearnerId> seen;
  for (const auto& m : models) {
    if (!seen.insert(m.id).second) {
      throw Error(ErrorCode::kInvalidArgument, "model " + std::string(learner_name(m.id)) + " listed twice");
    }
  }
}

ojson PipelineConfig::to_json() const {
  ojson models_doc = ojson::array();
  for (const auto& m : models) {
    ojson entry = {{"name", learner_name(m.id)}};
    entry["grid"] = m.grid ? *m.grid : ojson(nullptr);
    models_doc.push_back(std::move(entry));
  }
  const auto& b = selection.boruta;
  return {{"data_path", data_path.generic_string()},
          {"schema_path", schema_path.generic_string()},
          {"output_dir", output_dir.generic_string()},
          {"seed", seed},
          {"test_frac", test_frac},
          {"smote", {{"enabled", smote_enabled}, {"k_neighbors", smote.k_neighbors}, {"target_ratio", smote.target_ratio}}},
          {"selection",
           {{"top_k", selection.top_k},
            {"min_methods", selection.min_methods},
            {"forced_includes", selection.forced_includes},
            {"boruta",
             {{"max_iterations", b.max_iterations},
              {"n_trees", b.n_trees},
              {"significance", b.significance},
              {"max_depth", b.max_depth}}}}},
          {"cv", {{"n_folds", n_folds}, {"n_repeats", n_repeats}}},
          {"models", std::move(models_doc)}};
}

std::string PipelineConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return PipelineConfig::from_json(doc, path.parent_path());
}

// ---------------------------------------------------------------------------

namespace {

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir_.string());
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    written_.push_back(path);
    out << content;
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
  }

  void remove_written() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& p : written_) out.push_back(p.filename().string());
    std::sort(out.begin(), out.end());
    return out;
  }

  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

std::string fmt_metric(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_full(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Labels labels_of(const Labels& y, const std::vector<std::size_t>& rows) {
  Labels out;
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

ojson audit_json(const LeakageAudit& a) {
  return {{"evaluations", a.evaluations},
          {"validation_rows_scored", a.validation_rows_scored},
          {"synthetic_rows_in_validation", a.synthetic_rows_in_validation},
          {"validation_rows_in_training", a.validation_rows_in_training},
          {"validation_rows_as_smote_parents", a.validation_rows_as_smote_parents}};
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, const RunOptions& options) {
  RunResult result;
  result.output_dir = options.output_dir ? *options.output_dir : cfg.output_dir;
  OutputDir out(result.output_dir);
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  ojson manifest = ojson::object();
  manifest["format_version"] = kReportFormatVersion;
  manifest["toolkit_version"] = kToolkitVersion;
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = cfg.seed;
  ojson stages = ojson::array();
  ojson timings = ojson::object();
  std::string stage;
  auto clock_start = std::chrono::steady_clock::now();
  auto begin_stage = [&](std::string name) {
    stage = std::move(name);
    clock_start = std::chrono::steady_clock::now();
    log("stage " + stage);
  };
  auto end_stage = [&] {
    stages.push_back(stage);
    if (options.timings) {
      timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    }
  };

  try {
    cfg.validate();
    begin_stage("ingest");
    if (!fs::exists(cfg.data_path)) throw Error(ErrorCode::kIo, "data file not found: " + cfg.data_path.string());
    if (!fs::exists(cfg.schema_path)) throw Error(ErrorCode::kIo, "schema file not found: " + cfg.schema_path.string());
    auto schema = std::make_shared<DatasetSchema>(load_schema(cfg.schema_path));
    LoadReport report;
    const Dataset ds = load_dataset_csv(cfg.data_path, schema, &report);
    const SplitPlan split = stratified_split(ds.labels(), cfg.test_frac, derive_seed(cfg.seed, "split"));
    const Dataset train = ds.subset(split.train_indices);
    const long positives = std::count(ds.labels().begin(), ds.labels().end(), 1);
    manifest["rows"] = {{"read", report.rows_read},
                        {"dropped_missing_label", report.rows_dropped_missing_label},
                        {"dropped_missing_feature", report.rows_dropped_missing_feature},
                        {"kept", report.rows_kept},
                        {"anemic", positives},
                        {"not_anemic", static_cast<long>(ds.n_rows()) - positives},
                        {"train", split.train_indices.size()},
                        {"test", split.test_indices.size()}};
    if (options.emit_encoded) {
      std::ostringstream enc;
      write_encoded_csv(enc, encode(ds), ds.labels());
      out.write("encoded.csv", enc.str());
    }
    end_stage();

    begin_stage("select");
    SelectionConfig sel = cfg.selection;
    sel.boruta.seed = derive_seed(cfg.seed, "boruta");
    sel.boruta.jobs = options.jobs;
    const FeatureScoreTable scores = score_features(train, sel);
    {
      std::ostringstream s;
      write_feature_scores_csv(s, scores);
      out.write("feature_scores.csv", s.str());
    }
    std::vector<int> selected;
    for (const auto& name : scores.final_set) selected.push_back(schema->feature_index(name));
    if (selected.empty()) throw Error(ErrorCode::kInfeasible, "feature selection kept no features");
    manifest["selected_features"] = scores.final_set;
    end_stage();

    begin_stage("cv_plan");
    const EncodedMatrix enc = encode(ds, selected);
    const std::vector<int> cards = enc.cardinalities(*schema);
    const Eigen::MatrixXd X_train = rows_of(enc.values, split.train_indices);
    const Eigen::MatrixXd X_test = rows_of(enc.values, split.test_indices);
    const Labels y_train = labels_of(ds.labels(), split.train_indices);
    const Labels y_test = labels_of(ds.labels(), split.test_indices);
    const CvPlan plan = make_cv_plan(y_train, cfg.n_folds, cfg.n_repeats, derive_seed(cfg.seed, "cv"));
    manifest["encoded_columns"] = enc.cols();
    end_stage();

    std::vector<std::pair<std::string, MetricReport>> reports;
    std::ostringstream cv_csv;
    cv_csv << "model,candidate,hyperparameters,valid,mean_f1,std_f1";
    const int n_evals = cfg.n_folds * cfg.n_repeats;
    for (int e = 0; e < n_evals; ++e) cv_csv << ",r" << e / cfg.n_folds + 1 << "_f" << e % cfg.n_folds + 1;
    cv_csv << '\n';
    ojson models_doc = ojson::object();
    for (const auto& spec : cfg.models) {
      const std::string name(learner_name(spec.id));
      begin_stage("model:" + name);
      ojson entry = ojson::object();
      try {
        const ojson grid_spec = spec.grid ? *spec.grid : default_grid_spec(spec.id, enc.cols());
        const auto grid = expand_grid(grid_spec);
        GridSearchOptions gso;
        gso.smote = cfg.smote;
        gso.use_smote = cfg.smote_enabled;
        gso.jobs = options.jobs;
        gso.seed = derive_seed(cfg.seed, "model:" + name);
        gso.cardinalities = cards;
        GridSearchResult gs = grid_search(spec.id, grid, plan, X_train, y_train, gso);
        const MetricReport rep = evaluate(*gs.model, X_test, y_test, X_train, y_train);

        for (std::size_t c = 0; c < gs.candidates.size(); ++c) {
          const auto& cand = gs.candidates[c];
          cv_csv << name << ',' << c << ',' << quote(cand.hp.to_string()) << ',' << (cand.valid ? 1 : 0) << ','
                 << fmt_full(cand.mean_f1) << ',' << fmt_full(cand.std_f1);
          for (int e = 0; e < n_evals; ++e) {
            cv_csv << ',' << (cand.valid ? fmt_full(cand.fold_f1[static_cast<std::size_t>(e)]) : "NA");
          }
          cv_csv << '\n';
        }
        std::ostringstream roc, pr;
        roc << "threshold,fpr,tpr\n";
        for (const auto& p : rep.roc) roc << fmt_full(p.threshold) << ',' << fmt_full(p.fpr) << ',' << fmt_full(p.tpr) << '\n';
        pr << "threshold,recall,precision\n";
        for (const auto& p : rep.pr) pr << fmt_full(p.threshold) << ',' << fmt_full(p.recall) << ',' << fmt_full(p.precision) << '\n';
        out.write("roc_" + name + ".csv", roc.str());
        out.write("pr_" + name + ".csv", pr.str());
        ojson model_doc = gs.model->to_json();
        model_doc["columns"] = ojson::array();
        for (const auto& c : enc.column_map) model_doc["columns"].push_back(c.name);
        out.write("model_" + name + ".json", model_doc.dump(1) + "\n");

        entry["status"] = "ok";
        entry["best_hp"] = gs.best_hp.values();
        entry["best_cv_f1"] = gs.candidates[gs.best_index].mean_f1;
        entry["candidates"] = gs.candidates.size();
        entry["leakage_audit"] = audit_json(gs.audit);
        entry["metrics"] = rep.to_json()["metrics"];
        entry["flags"] = rep.flags;
        reports.emplace_back(name, rep);
      } catch (const Error& e) {
        if (!options.keep_going) throw;
        log("model " + name + " failed: " + e.what());
        entry["status"] = "failed";
        entry["error"] = e.what();
        entry["error_code"] = error_code_name(e.code());
      }
      models_doc[name] = std::move(entry);
      end_stage();
    }
    manifest["models"] = std::move(models_doc);

    begin_stage("report");
    if (reports.empty()) throw Error(ErrorCode::kSearchFailure, "every model failed");
    std::ostringstream perf;
    perf << "metric";
    for (const auto& [name, _] : reports) perf << ',' << name;
    perf << '\n';
    for (std::size_t r = 0; r < kMetricRowNames.size(); ++r) {
      perf << kMetricRowNames[r];
      for (const auto& [_, rep] : reports) perf << ',' << fmt_metric(rep.row_values()[r]);
      perf << '\n';
    }
    out.write("model_performance.csv", perf.str());
    out.write("cv_results.csv", cv_csv.str());
    end_stage();

    begin_stage("epi");
    std::ostringstream factors;
    write_factors_csv(factors, factor_table(ds));
    out.write("factors.csv", factors.str());
    end_stage();

    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.failed_stage = stage;
    result.error = e.what();
    if (const auto* err = dynamic_cast<const Error*>(&e)) result.error_code = err->code();
    log("failed in stage " + stage + ": " + e.what());
    out.remove_written();
  }

  manifest["stages_completed"] = std::move(stages);
  if (options.timings) manifest["timings_seconds"] = std::move(timings);
  manifest["status"] = result.ok ? "ok" : "failed";
  if (!result.ok) {
    manifest["failed_stage"] = result.failed_stage;
    manifest["error"] = result.error;
    manifest["error_code"] = error_code_name(result.error_code);
  }
  std::vector<std::string> files = out.names();
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  manifest["outputs"] = files;
  result.manifest = manifest;
  try {
    out.write("manifest.json", manifest.dump(2) + "\n");
  } catch (const Error& e) {
    if (result.ok) {
      result.ok = false;
      result.failed_stage = "manifest";
      result.error = e.what();
      result.error_code = e.code();
    }
  }
  return result;
}

}  // namespace anemiakit
