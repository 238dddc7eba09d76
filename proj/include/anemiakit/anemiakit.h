/* C interface to the anemiakit toolkit. All functions return an ak_status;
 * on failure ak_last_error() describes the most recent error on the calling
 * thread. Strings returned through char** are owned by the caller and must be
 * released with ak_string_free. */
#ifndef ANEMIAKIT_ANEMIAKIT_H
#define ANEMIAKIT_ANEMIAKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ANEMIAKIT_BUILDING)
#    define ANEMIAKIT_API __declspec(dllexport)
#  else
#    define ANEMIAKIT_API __declspec(dllimport)
#  endif
#else
#  define ANEMIAKIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ak_status {
  AK_OK = 0,
  AK_E_INVALID_ARGUMENT = 1,
  AK_E_IO = 2,
  AK_E_SCHEMA_VIOLATION = 3,
  AK_E_INVALID_MEASUREMENT = 4,
  AK_E_MISSING_ANTHROPOMETRY = 5,
  AK_E_UNIMPUTABLE = 6,
  AK_E_INFEASIBLE = 7,
  AK_E_DEGENERATE = 8,
  AK_E_NUMERIC = 9,
  AK_E_DIVERGED = 10,
  AK_E_SEARCH_FAILURE = 11,
  AK_E_INTERNAL = 12
} ak_status;

ANEMIAKIT_API const char* ak_version(void);
ANEMIAKIT_API int ak_report_format_version(void);
ANEMIAKIT_API const char* ak_status_name(ak_status status);
/* Message of the last failed call on this thread ("" if none). */
ANEMIAKIT_API const char* ak_last_error(void);
ANEMIAKIT_API void ak_string_free(char* s);

/* ---- Batch entry points ------------------------------------------------ */

typedef struct ak_run_options {
  int jobs;               /* worker threads, >= 1 */
  int keep_going;         /* record and skip failing models */
  int emit_encoded;       /* also write encoded.csv */
  int timings;            /* wall-clock per stage in the manifest */
  const char* output_dir; /* NULL: use the config's output_dir */
  int smote_k;            /* > 0 overrides the config */
  double smote_ratio;     /* > 0 overrides the config */
} ak_run_options;

ANEMIAKIT_API void ak_run_options_init(ak_run_options* options);

/* Runs the full workflow. `manifest_json` (optional) receives the manifest
 * on success and failure alike. `failed_stage` (optional) receives the stage
 * name on failure. */
ANEMIAKIT_API ak_status ak_run_pipeline(const char* config_path, const ak_run_options* options,
                                        char** manifest_json, char** failed_stage);

/* Writes data.csv, schema.json and truth.json into out_dir. */
ANEMIAKIT_API ak_status ak_generate_synthetic(const char* spec_path, uint64_t seed, const char* out_dir);

/* ---- Datasets ---------------------------------------------------------- */

typedef struct ak_dataset ak_dataset;

ANEMIAKIT_API ak_status ak_dataset_load(const char* csv_path, const char* schema_path, ak_dataset** out);
ANEMIAKIT_API void ak_dataset_free(ak_dataset* ds);
ANEMIAKIT_API size_t ak_dataset_rows(const ak_dataset* ds);
ANEMIAKIT_API size_t ak_dataset_features(const ak_dataset* ds);
/* Model encoding of all features: writes rows*cols values row-major into
 * `values` when non-NULL (capacity `capacity`), labels into `labels` when
 * non-NULL, and the column count into `cols`. */
ANEMIAKIT_API ak_status ak_dataset_encode(const ak_dataset* ds, double* values, size_t capacity,
                                          int* labels, size_t* cols);

/* ---- Models ------------------------------------------------------------ */

typedef struct ak_model ak_model;

/* name: LR, KNN, DT, RF, XGB, SVM, NB, LDA or DNN. */
ANEMIAKIT_API ak_status ak_model_create(const char* name, ak_model** out);
ANEMIAKIT_API void ak_model_free(ak_model* model);
/* X is row-major n x d; hyperparams_json may be NULL or "{}". */
ANEMIAKIT_API ak_status ak_model_fit(ak_model* model, const double* X, size_t n, size_t d, const int* y,
                                     const char* hyperparams_json, uint64_t seed);
ANEMIAKIT_API ak_status ak_model_predict_proba(const ak_model* model, const double* X, size_t n, size_t d,
                                               double* out);
ANEMIAKIT_API ak_status ak_model_to_json(const ak_model* model, char** json);

/* ---- Metrics ----------------------------------------------------------- */

typedef struct ak_metrics {
  double accuracy;
  double precision;
  double recall;
  double f1;
  double cohens_kappa; /* NaN when undefined */
} ak_metrics;

ANEMIAKIT_API ak_status ak_confusion_metrics(long tp, long tn, long fp, long fn, ak_metrics* out);
ANEMIAKIT_API ak_status ak_roc_auc(const double* scores, const int* labels, size_t n, double* out);
ANEMIAKIT_API ak_status ak_average_precision(const double* scores, const int* labels, size_t n, double* out);

/* ---- Odds ratios ------------------------------------------------------- */

/* (a d) / (b c): a/b the level's anemic/not-anemic counts, c/d the
 * reference's. */
ANEMIAKIT_API ak_status ak_crude_or(long a, long b, long c, long d, int haldane, double* out);
ANEMIAKIT_API ak_status ak_wald_ci(double beta, double se, double level, double* low, double* high);

#ifdef __cplusplus
}
#endif

#endif
