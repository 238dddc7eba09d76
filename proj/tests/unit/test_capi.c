/* C-only client of the shared library. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "anemiakit/anemiakit.h"

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

static void test_metrics(void) {
  ak_metrics m;
  EXPECT(ak_confusion_metrics(3, 4, 1, 2, &m) == AK_OK);
  EXPECT(fabs(m.accuracy - 0.7) < 1e-12);
  EXPECT(fabs(m.precision - 0.75) < 1e-12);
  EXPECT(fabs(m.recall - 0.6) < 1e-12);
  EXPECT(fabs(m.cohens_kappa - 0.4) < 1e-12);
  EXPECT(ak_confusion_metrics(-1, 4, 1, 2, &m) == AK_E_INVALID_ARGUMENT);
  EXPECT(strlen(ak_last_error()) > 0);

  const double s[] = {0.9, 0.8, 0.85, 0.7};
  const int y[] = {1, 1, 0, 0};
  double v = 0;
  EXPECT(ak_roc_auc(s, y, 4, &v) == AK_OK);
  EXPECT(fabs(v - 0.75) < 1e-12);
  const double s3[] = {0.9, 0.8, 0.7};
  const int y3[] = {1, 0, 1};
  EXPECT(ak_average_precision(s3, y3, 3, &v) == AK_OK);
  EXPECT(fabs(v - 5.0 / 6.0) < 1e-12);
  const int none[] = {0, 0, 0};
  EXPECT(ak_average_precision(s3, none, 3, &v) == AK_E_DEGENERATE);
}

static void test_odds(void) {
  double v = 0, lo = 0, hi = 0;
  EXPECT(ak_crude_or(322, 309, 448, 776, 0, &v) == AK_OK);
  EXPECT(fabs(v - 1.805) < 1e-3);
  EXPECT(ak_crude_or(0, 309, 448, 776, 0, &v) == AK_E_DEGENERATE);
  EXPECT(ak_crude_or(0, 309, 448, 776, 1, &v) == AK_OK);
  EXPECT(ak_wald_ci(0.0, 0.1, 0.95, &lo, &hi) == AK_OK);
  EXPECT(fabs(lo - 0.822) < 1e-3 && fabs(hi - 1.217) < 1e-3);
  EXPECT(ak_wald_ci(0.0, -1.0, 0.95, &lo, &hi) == AK_E_INVALID_ARGUMENT);
}

static void test_models(void) {
  ak_dataset* ds = NULL;
  EXPECT(ak_dataset_load(ANEMIAKIT_DEMO "/data.csv", ANEMIAKIT_DEMO "/schema.json", &ds) == AK_OK);
  if (!ds) return;
  const size_t n = ak_dataset_rows(ds);
  EXPECT(n == 2000);
  EXPECT(ak_dataset_features(ds) == 13);
  size_t cols = 0;
  EXPECT(ak_dataset_encode(ds, NULL, 0, NULL, &cols) == AK_OK);
  double* X = malloc(sizeof(double) * n * cols);
  int* y = malloc(sizeof(int) * n);
  EXPECT(ak_dataset_encode(ds, X, 1, y, &cols) == AK_E_INVALID_ARGUMENT);
  EXPECT(ak_dataset_encode(ds, X, n * cols, y, &cols) == AK_OK);

  ak_model* m = NULL;
  EXPECT(ak_model_create("nonsense", &m) == AK_E_INVALID_ARGUMENT);
  EXPECT(ak_model_create("LR", &m) == AK_OK);
  EXPECT(ak_model_fit(m, X, n, cols, y, "{\"l2\": 0.5}", 1) == AK_OK);
  EXPECT(ak_model_fit(m, X, n, cols, y, "{\"l2\": ", 1) == AK_E_INVALID_ARGUMENT);
  double* p = malloc(sizeof(double) * n);
  EXPECT(ak_model_predict_proba(m, X, n, cols, p) == AK_OK);
  double auc = 0;
  EXPECT(ak_roc_auc(p, y, n, &auc) == AK_OK);
  EXPECT(auc > 0.6);
  char* json = NULL;
  EXPECT(ak_model_to_json(m, &json) == AK_OK);
  EXPECT(json && strstr(json, "\"LR\"") != NULL);
  ak_string_free(json);
  ak_model_free(m);
  free(p);
  free(X);
  free(y);
  ak_dataset_free(ds);

  EXPECT(ak_dataset_load("/no/such.csv", ANEMIAKIT_DEMO "/schema.json", &ds) == AK_E_IO);
}

static void test_pipeline_errors(void) {
  char* manifest = NULL;
  char* stage = NULL;
  ak_run_options opts;
  ak_run_options_init(&opts);
  EXPECT(opts.jobs == 1);
  EXPECT(ak_run_pipeline("/no/such/config.json", &opts, &manifest, &stage) != AK_OK);
  EXPECT(stage && strcmp(stage, "config") == 0);
  ak_string_free(stage);
  ak_string_free(manifest);
}

int main(void) {
  EXPECT(strcmp(ak_version(), "1.0.0") == 0);
  EXPECT(ak_report_format_version() == 1);
  EXPECT(strcmp(ak_status_name(AK_OK), "ok") == 0);
  EXPECT(strcmp(ak_status_name(AK_E_INFEASIBLE), "infeasible") == 0);
  test_metrics();
  test_odds();
  test_models();
  test_pipeline_errors();
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
