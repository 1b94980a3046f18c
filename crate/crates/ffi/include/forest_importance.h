#ifndef FOREST_IMPORTANCE_H
#define FOREST_IMPORTANCE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Rows of a contextual report.
typedef enum FiContextMeasure {
  // `Imp(X_m)`; the context value is ignored.
  FI_CONTEXT_MEASURE_IMP = 0,
  // `Imp(X_m | X_c = x_c)`.
  FI_CONTEXT_MEASURE_GIVEN = 1,
  // `Imp^{|x_c|}(X_m)`.
  FI_CONTEXT_MEASURE_ABS = 2,
  // `Imp_s^{x_c}(X_m)`.
  FI_CONTEXT_MEASURE_SIGNED = 3,
  // `Imp^{X_c}(X_m)`; the context value is ignored.
  FI_CONTEXT_MEASURE_GLOBAL = 4,
} FiContextMeasure;

typedef enum FiFormat {
  FI_FORMAT_CSV = 0,
  FI_FORMAT_JSON = 1,
  FI_FORMAT_MARKDOWN = 2,
} FiFormat;

typedef enum FiMethod {
  FI_METHOD_BAGGING = 0,
  FI_METHOD_RANDOM_SUBSPACE = 1,
  FI_METHOD_RANDOM_PATCHES = 2,
  FI_METHOD_EXTRA_TREES = 3,
  FI_METHOD_TOTALLY_RANDOMIZED = 4,
} FiMethod;

typedef enum FiScenario {
  FI_SCENARIO_CHAINING = 0,
  FI_SCENARIO_CLIQUE = 1,
  FI_SCENARIO_MARGINAL_ONLY = 2,
} FiScenario;

typedef enum FiSplitFamily {
  FI_SPLIT_FAMILY_MULTIWAY_EXHAUSTIVE = 0,
  FI_SPLIT_FAMILY_BINARY_ORDERED = 1,
  FI_SPLIT_FAMILY_BINARY_UNORDERED = 2,
  FI_SPLIT_FAMILY_BINARY_ONE_VS_ALL = 3,
} FiSplitFamily;

// Result of a fallible call.
typedef enum FiStatus {
  FI_STATUS_OK = 0,
  FI_STATUS_NULL_POINTER = 1,
  FI_STATUS_INVALID_UTF8 = 2,
  FI_STATUS_INVALID_PARAMETER = 3,
  FI_STATUS_INVALID_CONFIG = 4,
  FI_STATUS_FORMAT = 5,
  FI_STATUS_UNKNOWN_VARIABLE = 6,
  FI_STATUS_TOO_LARGE = 7,
  FI_STATUS_EMPTY = 8,
  FI_STATUS_NUMERICAL = 9,
  FI_STATUS_IO = 10,
  FI_STATUS_OUT_OF_RANGE = 11,
  FI_STATUS_PANIC = 12,
} FiStatus;

typedef enum FiSubspaceMethod {
  FI_SUBSPACE_METHOD_RS = 0,
  FI_SUBSPACE_METHOD_SRS = 1,
} FiSubspaceMethod;

typedef struct FiContext FiContext;

typedef struct FiDataset FiDataset;

typedef struct FiDistribution FiDistribution;

typedef struct FiForest FiForest;

typedef struct FiImportance FiImportance;

typedef struct FiScores FiScores;

typedef struct FiSeries FiSeries;

// Forest parameters. `k = 0` draws every variable at each node; a negative
// `max_depth` means unlimited; `q` and `rows` only matter for the subspace
// and patch methods.
typedef struct FiForestConfig {
  enum FiMethod method;
  uintptr_t n_trees;
  uintptr_t k;
  int64_t max_depth;
  uintptr_t q;
  uintptr_t rows;
  enum FiSplitFamily split_family;
  uint64_t seed;
} FiForestConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a
// successful one. Valid until the next `fi_*` call on the thread.
const char *fi_last_error_message(void);

// Version of the library, a static string.
const char *fi_version(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void fi_string_free(char *s);

// Builds a generated distribution from a problem such as `"digit"` or
// `"xor_strongweak:0.8"`.
//
// # Safety
// `problem` must be a NUL-terminated string and `out` writable.
enum FiStatus fi_distribution_generate(const char *problem, struct FiDistribution **out);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum FiStatus fi_distribution_load(const char *path, struct FiDistribution **out);

// # Safety
// `dist` must be a live handle and `path` a NUL-terminated string.
enum FiStatus fi_distribution_save(const struct FiDistribution *dist, const char *path);

// Number of inputs, 0 for a null handle.
//
// # Safety
// `dist` must be null or a live handle.
uintptr_t fi_distribution_n_inputs(const struct FiDistribution *dist);

// # Safety
// `dist` must be null or a handle not yet freed.
void fi_distribution_free(struct FiDistribution *dist);

// Reads a CSV dataset. `target` and `context` may be null.
//
// # Safety
// String arguments must be null (where allowed) or NUL-terminated; `out`
// writable.
enum FiStatus fi_dataset_load_csv(const char *path,
                                  const char *target,
                                  const char *context,
                                  struct FiDataset **out);

// One weighted row per configuration of the distribution.
//
// # Safety
// `dist` must be a live handle and `out` writable.
enum FiStatus fi_dataset_exact(const struct FiDistribution *dist, struct FiDataset **out);

// `n` rows drawn from the distribution.
//
// # Safety
// `dist` must be a live handle and `out` writable.
enum FiStatus fi_dataset_sample(const struct FiDistribution *dist,
                                uintptr_t n,
                                uint64_t seed,
                                struct FiDataset **out);

// # Safety
// `ds` must be null or a live handle.
uintptr_t fi_dataset_n_rows(const struct FiDataset *ds);

// # Safety
// `ds` must be null or a live handle.
uintptr_t fi_dataset_n_inputs(const struct FiDataset *ds);

// # Safety
// `ds` must be null or a handle not yet freed.
void fi_dataset_free(struct FiDataset *ds);

// Totally randomized trees, 1000 of them.
struct FiForestConfig fi_forest_config_default(void);

// # Safety
// `ds` must be a live handle, `config` readable and `out` writable.
enum FiStatus fi_forest_build(const struct FiDataset *ds,
                              const struct FiForestConfig *config,
                              struct FiForest **out);

// # Safety
// `forest` must be null or a handle not yet freed.
void fi_forest_free(struct FiForest *forest);

// Infinite-sample MDI of totally randomized trees of depth `depth`.
//
// # Safety
// `dist` must be a live handle and `out` writable.
enum FiStatus fi_importance_oracle(const struct FiDistribution *dist,
                                   uintptr_t depth,
                                   struct FiImportance **out);

// Mean decrease of impurity of a forest grown on `ds`.
//
// # Safety
// `forest` and `ds` must be live handles and `out` writable.
enum FiStatus fi_importance_mdi(const struct FiForest *forest,
                                const struct FiDataset *ds,
                                struct FiImportance **out);

// Out-of-bag mean decrease of accuracy (0-1 loss for classification,
// squared error otherwise).
//
// # Safety
// `forest` and `ds` must be live handles and `out` writable.
enum FiStatus fi_importance_mda(const struct FiForest *forest,
                                const struct FiDataset *ds,
                                uintptr_t n_repeats,
                                uint64_t seed,
                                struct FiImportance **out);

// Number of variables, 0 for a null handle.
//
// # Safety
// `imp` must be null or a live handle.
uintptr_t fi_importance_len(const struct FiImportance *imp);

// Name of variable `m`, owned by the handle; null when out of range.
//
// # Safety
// `imp` must be null or a live handle.
const char *fi_importance_name(const struct FiImportance *imp, uintptr_t m);

// Copies the scores into `buf`, which holds `len` values.
//
// # Safety
// `imp` must be a live handle and `buf` writable for `len` values.
enum FiStatus fi_importance_scores(const struct FiImportance *imp, double *buf, uintptr_t len);

// Contribution of degree (or depth) `k` to the score of variable `m`.
//
// # Safety
// `imp` must be a live handle and `out` writable.
enum FiStatus fi_importance_per_degree(const struct FiImportance *imp,
                                       uintptr_t m,
                                       uintptr_t k,
                                       double *out);

// Renders the report; free the text with [`fi_string_free`].
//
// # Safety
// `imp` must be a live handle and `out` writable.
enum FiStatus fi_importance_render(const struct FiImportance *imp,
                                   enum FiFormat format,
                                   uintptr_t decimals,
                                   char **out);

// # Safety
// `imp` must be null or a handle not yet freed.
void fi_importance_free(struct FiImportance *imp);

// Exact contextual importances of a distribution with a context variable.
//
// # Safety
// `dist` must be a live handle and `out` writable.
enum FiStatus fi_context_oracle(const struct FiDistribution *dist, struct FiContext **out);

// # Safety
// `ctx` must be null or a live handle.
uintptr_t fi_context_len(const struct FiContext *ctx);

// Number of context values, 0 for a null handle.
//
// # Safety
// `ctx` must be null or a live handle.
uintptr_t fi_context_n_values(const struct FiContext *ctx);

// # Safety
// `ctx` must be null or a live handle.
const char *fi_context_name(const struct FiContext *ctx, uintptr_t m);

// One entry of the report: variable `m`, context value index `c`.
//
// # Safety
// `ctx` must be a live handle and `out` writable.
enum FiStatus fi_context_get(const struct FiContext *ctx,
                             enum FiContextMeasure measure,
                             uintptr_t m,
                             uintptr_t c,
                             double *out);

// # Safety
// `ctx` must be a live handle and `out` writable.
enum FiStatus fi_context_render(const struct FiContext *ctx,
                                enum FiFormat format,
                                uintptr_t decimals,
                                char **out);

// # Safety
// `ctx` must be null or a handle not yet freed.
void fi_context_free(struct FiContext *ctx);

// Closed-form expected number of iterations to find `i` of the `r`
// relevant features (chaining and clique only).
//
// # Safety
// `out` must be writable.
enum FiStatus fi_srs_expected_time(enum FiScenario scenario,
                                   enum FiSubspaceMethod method,
                                   uint64_t p,
                                   uint64_t q,
                                   uint64_t r,
                                   uint64_t i,
                                   double *out);

// Expected number of iterations to find all `r` relevant features, from
// the absorbing Markov chain.
//
// # Safety
// `out` must be writable.
enum FiStatus fi_srs_markov_expected_time(enum FiScenario scenario,
                                          enum FiSubspaceMethod method,
                                          uint64_t p,
                                          uint64_t q,
                                          uint64_t r,
                                          double *out);

// Series from `steps × nodes` values in row-major order, nodes named
// `X1..Xp`.
//
// # Safety
// `values` must be readable for `steps * nodes` values and `out` writable.
enum FiStatus fi_series_from_values(const double *values,
                                    uintptr_t steps,
                                    uintptr_t nodes,
                                    struct FiSeries **out);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum FiStatus fi_series_load(const char *path, struct FiSeries **out);

// # Safety
// `series` must be null or a handle not yet freed.
void fi_series_free(struct FiSeries *series);

// Partial correlations of the raw series; `components = 0` inverts the
// full covariance, otherwise only the leading principal components are
// kept.
//
// # Safety
// `series` must be a live handle and `out` writable.
enum FiStatus fi_partial_correlation(const struct FiSeries *series,
                                     uintptr_t components,
                                     struct FiScores **out);

// Partial correlations averaged over the weighted filter grid.
//
// # Safety
// `series` must be a live handle and `out` writable.
enum FiStatus fi_averaged_partial_correlation(const struct FiSeries *series,
                                              uintptr_t components,
                                              struct FiScores **out);

// # Safety
// `scores` must be null or a live handle.
uintptr_t fi_scores_n_nodes(const struct FiScores *scores);

// Score of the edge `i → j`.
//
// # Safety
// `scores` must be a live handle and `out` writable.
enum FiStatus fi_scores_get(const struct FiScores *scores, uintptr_t i, uintptr_t j, double *out);

// AUROC and AUPRC of the scores against the `n_edges` true edges
// `src[e] → dst[e]`.
//
// # Safety
// `scores` must be a live handle, `src` and `dst` readable for `n_edges`
// values, `auroc` and `auprc` writable.
enum FiStatus fi_evaluate(const struct FiScores *scores,
                          const uintptr_t *src,
                          const uintptr_t *dst,
                          uintptr_t n_edges,
                          bool directed,
                          double *auroc,
                          double *auprc);

// # Safety
// `scores` must be null or a handle not yet freed.
void fi_scores_free(struct FiScores *scores);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOREST_IMPORTANCE_H */
