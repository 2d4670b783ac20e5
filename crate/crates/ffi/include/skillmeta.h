#ifndef SKILLMETA_H
#define SKILLMETA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Rows selected by forecast horizon.
 */
typedef enum SmPartition {
  SM_PARTITION_INTRA_HOUR = 0,
  SM_PARTITION_INTRA_DAY = 1,
  SM_PARTITION_DAY_AHEAD = 2,
  SM_PARTITION_ALL = 3,
} SmPartition;

typedef enum SmReference {
  SM_REFERENCE_PERSISTENCE = 0,
  SM_REFERENCE_SMART_PERSISTENCE = 1,
  SM_REFERENCE_CONVEX_COMBINATION = 2,
} SmReference;

/**
 * Result codes.
 */
typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_UTF8 = 2,
  SM_STATUS_MISSING_FILE = 3,
  SM_STATUS_PARSE_ERROR = 4,
  SM_STATUS_INVALID_INPUT = 5,
  SM_STATUS_NUMERICAL = 6,
  SM_STATUS_NOT_FOUND = 7,
  SM_STATUS_PANIC = 8,
} SmStatus;

/**
 * Loaded, validated database.
 */
typedef struct SmDataset SmDataset;

/**
 * Fitted MARS model.
 */
typedef struct SmMarsModel SmMarsModel;

/**
 * Fitted OLS regression.
 */
typedef struct SmOlsFit SmOlsFit;

/**
 * Descriptive statistics of one column.
 */
typedef struct SmSummary {
  size_t n;
  double mean;
  double sd;
  double median;
  double trimmed_mean;
  double mad;
  double min;
  double max;
  double range;
  double skew;
  double kurtosis;
  double se;
} SmSummary;

/**
 * Outcome of scoring a forecast series.
 */
typedef struct SmSkillResult {
  double rmse_forecast;
  double rmse_reference;
  double ss_pct;
  /**
   * CP weight used; NaN for other references.
   */
  double alpha;
  size_t n_scored;
  size_t excluded_night;
} SmSkillResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *sm_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sm_version(void);

/**
 * Load a database file. Rows failing validation are skipped.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SmStatus sm_dataset_load(const char *path, uint8_t delimiter, struct SmDataset **out);

/**
 * # Safety
 * `ds` must come from [`sm_dataset_load`] and not be used afterwards.
 */
void sm_dataset_free(struct SmDataset *ds);

/**
 * Number of rows in a partition.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SmStatus sm_dataset_row_count(const struct SmDataset *ds,
                                   enum SmPartition partition,
                                   size_t *out);

/**
 * Summary statistics of a numeric or dummy column.
 *
 * # Safety
 * Pointers must be valid; `variable` NUL-terminated.
 */
enum SmStatus sm_dataset_summarize(const struct SmDataset *ds,
                                   const char *variable,
                                   struct SmSummary *out);

/**
 * OLS of SS on the encoded factors within a partition.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SmStatus sm_ols_fit(const struct SmDataset *ds,
                         enum SmPartition partition,
                         struct SmOlsFit **out);

/**
 * # Safety
 * `fit` must come from [`sm_ols_fit`] and not be used afterwards.
 */
void sm_ols_free(struct SmOlsFit *fit);

/**
 * Coefficient, standard error and p-value of a named column.
 * `SM_STATUS_NOT_FOUND` when the column was dropped or does not exist.
 * Any of the output pointers may be null.
 *
 * # Safety
 * `fit` must be valid; `name` NUL-terminated.
 */
enum SmStatus sm_ols_coefficient(const struct SmOlsFit *fit,
                                 const char *name,
                                 double *coefficient,
                                 double *std_error,
                                 double *p_value);

/**
 * R², adjusted R² and observation count. Output pointers may be null.
 *
 * # Safety
 * `fit` must be valid.
 */
enum SmStatus sm_ols_stats(const struct SmOlsFit *fit,
                           double *r_squared,
                           double *adj_r_squared,
                           size_t *n);

/**
 * Fit MARS within a partition. Remaining settings take their defaults.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SmStatus sm_mars_fit(const struct SmDataset *ds,
                          enum SmPartition partition,
                          size_t max_degree,
                          size_t max_terms,
                          struct SmMarsModel **out);

/**
 * # Safety
 * `model` must come from [`sm_mars_fit`] and not be used afterwards.
 */
void sm_mars_free(struct SmMarsModel *model);

/**
 * Training R², generalized R² and number of basis terms (intercept
 * excluded). Output pointers may be null.
 *
 * # Safety
 * `model` must be valid.
 */
enum SmStatus sm_mars_stats(const struct SmMarsModel *model,
                            double *rsq,
                            double *grsq,
                            size_t *n_terms);

/**
 * Predict every row of a dataset partition into `out` (capacity `len`,
 * which must equal the partition's row count).
 *
 * # Safety
 * Pointers must be valid; `out` must hold `len` doubles.
 */
enum SmStatus sm_mars_predict(const struct SmMarsModel *model,
                              const struct SmDataset *ds,
                              enum SmPartition partition,
                              double *out,
                              size_t len);

/**
 * Root mean squared error of two equal-length arrays.
 *
 * # Safety
 * Arrays must hold `n` doubles.
 */
enum SmStatus sm_rmse(const double *actual, const double *forecast, size_t n, double *out);

/**
 * `100 * (1 - a_f / a_r)`.
 *
 * # Safety
 * `out` must be valid.
 */
enum SmStatus sm_skill_score(double a_f, double a_r, double *out);

/**
 * Score a forecast series against a reference at horizon `h` steps.
 * `clear_sky` may be null except for smart persistence and CP. For CP a
 * NaN `alpha` optimizes the weight on the observations themselves.
 *
 * # Safety
 * Arrays must hold `n` doubles; `out` must be valid.
 */
enum SmStatus sm_score_series(const double *observed,
                              const double *forecast,
                              const double *clear_sky,
                              size_t n,
                              double step_minutes,
                              enum SmReference reference,
                              size_t h,
                              double alpha,
                              struct SmSkillResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKILLMETA_H */
