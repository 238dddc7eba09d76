#include "anemiakit/anemiakit.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "anemiakit/epi.hpp"
#include "anemiakit/eval.hpp"
#include "anemiakit/ingest.hpp"
#include "anemiakit/pipeline.hpp"
#include "anemiakit/synth.hpp"

using namespace anemiakit;

struct ak_dataset {
  Dataset data;
};

struct ak_model {
  std::unique_ptr<ClassifierModel> model;
};

namespace {

thread_local std::string g_last_error;

ak_status fail(ak_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
ak_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return AK_OK;
  } catch (const Error& e) {
    return fail(static_cast<ak_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(AK_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AK_E_INTERNAL, e.what());
  } catch (...) {
    return fail(AK_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

Eigen::MatrixXd from_row_major(const double* X, size_t n, size_t d) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = X[i * d + j];
  }
  return m;
}

}  // namespace

static_assert(static_cast<int>(ErrorCode::kInternal) == AK_E_INTERNAL, "status codes out of sync");
static_assert(static_cast<int>(ErrorCode::kInvalidArgument) == AK_E_INVALID_ARGUMENT, "status codes out of sync");

extern "C" {

const char* ak_version(void) {
  static const std::string v(kToolkitVersion);
  return v.c_str();
}

int ak_report_format_version(void) { return kReportFormatVersion; }

const char* ak_status_name(ak_status status) {
  if (status == AK_OK) return "ok";
  if (status < AK_E_INVALID_ARGUMENT || status > AK_E_INTERNAL) return "unknown";
  return error_code_name(static_cast<ErrorCode>(status)).data();
}

const char* ak_last_error(void) { return g_last_error.c_str(); }

void ak_string_free(char* s) { std::free(s); }

void ak_run_options_init(ak_run_options* options) {
  if (!options) return;
  *options = ak_run_options{};
  options->jobs = 1;
}

ak_status ak_run_pipeline(const char* config_path, const ak_run_options* options, char** manifest_json,
                          char** failed_stage) {
  if (manifest_json) *manifest_json = nullptr;
  if (failed_stage) *failed_stage = nullptr;
  RunResult result;
  const ak_status loaded = guard([&] {
    require(config_path != nullptr, "config_path is NULL");
    ak_run_options opts;
    ak_run_options_init(&opts);
    if (options) opts = *options;
    require(opts.jobs >= 1, "jobs must be >= 1");
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (opts.smote_k > 0) cfg.smote.k_neighbors = opts.smote_k;
    if (opts.smote_ratio > 0) cfg.smote.target_ratio = opts.smote_ratio;
    RunOptions ro;
    ro.jobs = opts.jobs;
    ro.keep_going = opts.keep_going != 0;
    ro.emit_encoded = opts.emit_encoded != 0;
    ro.timings = opts.timings != 0;
    if (opts.output_dir && *opts.output_dir) ro.output_dir = std::filesystem::path(opts.output_dir);
    result = run_pipeline(cfg, ro);
    if (manifest_json) *manifest_json = dup_string(result.manifest.dump(2));
    if (!result.ok && failed_stage) *failed_stage = dup_string(result.failed_stage);
  });
  if (loaded != AK_OK) {
    if (failed_stage && !*failed_stage) *failed_stage = dup_string("config");
    return loaded;
  }
  if (!result.ok) return fail(static_cast<ak_status>(result.error_code), result.error);
  return AK_OK;
}

ak_status ak_generate_synthetic(const char* spec_path, uint64_t seed, const char* out_dir) {
  return guard([&] {
    require(spec_path && out_dir, "spec_path and out_dir are required");
    generate_synthetic(load_synthetic_spec(spec_path), seed, out_dir);
  });
}

ak_status ak_dataset_load(const char* csv_path, const char* schema_path, ak_dataset** out) {
  return guard([&] {
    require(csv_path && schema_path && out, "csv_path, schema_path and out are required");
    *out = nullptr;
    auto schema = std::make_shared<DatasetSchema>(load_schema(schema_path));
    *out = new ak_dataset{load_dataset_csv(csv_path, schema)};
  });
}

void ak_dataset_free(ak_dataset* ds) { delete ds; }

size_t ak_dataset_rows(const ak_dataset* ds) { return ds ? ds->data.n_rows() : 0; }

size_t ak_dataset_features(const ak_dataset* ds) { return ds ? ds->data.n_features() : 0; }

ak_status ak_dataset_encode(const ak_dataset* ds, double* values, size_t capacity, int* labels, size_t* cols) {
  return guard([&] {
    require(ds != nullptr, "dataset is NULL");
    const EncodedMatrix m = encode(ds->data);
    if (cols) *cols = m.cols();
    if (values) {
      require(capacity >= m.rows() * m.cols(), "value buffer too small");
      for (size_t i = 0; i < m.rows(); ++i) {
        for (size_t j = 0; j < m.cols(); ++j) {
          values[i * m.cols() + j] = m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
      }
    }
    if (labels) std::copy(ds->data.labels().begin(), ds->data.labels().end(), labels);
  });
}

ak_status ak_model_create(const char* name, ak_model** out) {
  return guard([&] {
    require(name && out, "name and out are required");
    *out = nullptr;
    const auto id = parse_learner(name);
    if (!id) throw Error(ErrorCode::kInvalidArgument, std::string("unknown learner '") + name + "'");
    *out = new ak_model{make_learner(*id)};
  });
}

void ak_model_free(ak_model* model) { delete model; }

ak_status ak_model_fit(ak_model* model, const double* X, size_t n, size_t d, const int* y,
                       const char* hyperparams_json, uint64_t seed) {
  return guard([&] {
    require(model && X && y, "model, X and y are required");
    const Eigen::MatrixXd m = from_row_major(X, n, d);
    const Labels labels(y, y + n);
    ojson hp = ojson::object();
    if (hyperparams_json && *hyperparams_json) {
      try {
        hp = ojson::parse(hyperparams_json);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("hyperparameters: ") + e.what());
      }
    }
    FitOptions fo;
    fo.seed = seed;
    model->model->fit(m, labels, HyperParams(hp), fo);
  });
}

ak_status ak_model_predict_proba(const ak_model* model, const double* X, size_t n, size_t d, double* out) {
  return guard([&] {
    require(model && X && out, "model, X and out are required");
    const Eigen::VectorXd p = model->model->predict_proba(from_row_major(X, n, d));
    for (size_t i = 0; i < n; ++i) out[i] = p(static_cast<Eigen::Index>(i));
  });
}

ak_status ak_model_to_json(const ak_model* model, char** json) {
  return guard([&] {
    require(model && json, "model and json are required");
    *json = dup_string(model->model->to_json().dump(2));
  });
}

ak_status ak_confusion_metrics(long tp, long tn, long fp, long fn, ak_metrics* out) {
  return guard([&] {
    require(out != nullptr, "out is NULL");
    require(tp >= 0 && tn >= 0 && fp >= 0 && fn >= 0, "counts must be >= 0");
    const ConfusionMatrix cm{tp, tn, fp, fn};
    const BasicMetrics m = basic_metrics(cm);
    out->accuracy = m.accuracy;
    out->precision = m.precision;
    out->recall = m.recall;
    out->f1 = m.f1;
    try {
      out->cohens_kappa = cohens_kappa(cm);
    } catch (const Error&) {
      out->cohens_kappa = std::numeric_limits<double>::quiet_NaN();
    }
  });
}

ak_status ak_roc_auc(const double* scores, const int* labels, size_t n, double* out) {
  return guard([&] {
    require(scores && labels && out, "scores, labels and out are required");
    *out = roc_auc(std::span<const double>(scores, n), Labels(labels, labels + n));
  });
}

ak_status ak_average_precision(const double* scores, const int* labels, size_t n, double* out) {
  return guard([&] {
    require(scores && labels && out, "scores, labels and out are required");
    *out = average_precision(std::span<const double>(scores, n), Labels(labels, labels + n));
  });
}

ak_status ak_crude_or(long a, long b, long c, long d, int haldane, double* out) {
  return guard([&] {
    require(out != nullptr, "out is NULL");
    const std::vector<ContingencyRow> rows = {{"f", "ref", c, d, c + d, 0.0}, {"f", "level", a, b, a + b, 0.0}};
    const auto ors = crude_or(rows, "ref", haldane != 0);
    if (!ors[1].defined) throw Error(ErrorCode::kDegenerate, "odds ratio undefined: zero cell");
    *out = ors[1].value;
  });
}

ak_status ak_wald_ci(double beta, double se, double level, double* low, double* high) {
  return guard([&] {
    require(low && high, "low and high are required");
    const WaldInterval ci = wald_ci(beta, se, level);
    *low = ci.low;
    *high = ci.high;
  });
}

}  // extern "C"
