#ifndef STRUCTSPARSE_H
#define STRUCTSPARSE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>

/*
 Result codes. Zero is success.
 */
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_DIMENSION_MISMATCH = 3,
  SS_STATUS_NON_FINITE = 4,
  SS_STATUS_INFEASIBLE = 5,
  SS_STATUS_INVALID_STRUCTURE = 6,
  SS_STATUS_PARSE = 7,
  SS_STATUS_OUT_OF_RANGE = 8,
  SS_STATUS_INTERNAL = 9,
} SsStatus;

/*
 Candidate base blocks.
 */
typedef struct SsBlockSet SsBlockSet;

/*
 Row-major design matrix.
 */
typedef struct SsDesign SsDesign;

/*
 Solution path of one solver run.
 */
typedef struct SsPath SsPath;

/*
 Coding scheme pricing support sets.
 */
typedef struct SsScheme SsScheme;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. The pointer
 stays valid until the next `ss_*` call on the same thread.
 */
const char *ss_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ss_version(void);

/*
 Copies an `n × p` row-major matrix.

 # Safety
 `data` must point to `n * p` readable doubles; `out` must be writable.
 */
enum SsStatus ss_design_new(const double *data, size_t n, size_t p, struct SsDesign **out);

/*
 # Safety
 `design` must come from [`ss_design_new`] and not be used afterwards.
 */
void ss_design_free(struct SsDesign *design);

/*
 # Safety
 `design` must be valid; `n` and `p` writable or null.
 */
enum SsStatus ss_design_dims(const struct SsDesign *design, size_t *n, size_t *p);

/*
 Builds a block set from its JSON descriptor, e.g.
 `{"kind": "line", "p": 64}`.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SsStatus ss_blocks_from_json(const char *json, struct SsBlockSet **out);

/*
 # Safety
 `blocks` must come from [`ss_blocks_from_json`] and not be used afterwards.
 */
void ss_blocks_free(struct SsBlockSet *blocks);

/*
 Number of base blocks, or 0 for a null handle.

 # Safety
 `blocks` must be valid or null.
 */
size_t ss_blocks_len(const struct SsBlockSet *blocks);

/*
 Builds a coding scheme from its JSON descriptor, e.g.
 `{"kind": "graph", "graph": {"kind": "line", "p": 64}}`.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SsStatus ss_scheme_from_json(const char *json, struct SsScheme **out);

/*
 # Safety
 `scheme` must come from [`ss_scheme_from_json`] and not be used afterwards.
 */
void ss_scheme_free(struct SsScheme *scheme);

/*
 `c(F) = |F| + cl(F)` for the support given by `indices`. Writes
 `INFINITY` when the scheme cannot encode `F`.

 # Safety
 `indices` must point to `len` readable values; `out` must be writable.
 */
enum SsStatus ss_scheme_complexity(const struct SsScheme *scheme,
                                   const size_t *indices,
                                   size_t len,
                                   double *out);

/*
 Structured greedy solver with complexity budget `budget` (pass
 `INFINITY` for none). The selected point is the last one within budget.

 # Safety
 Handles must be valid; `y` must point to `y_len` doubles; `out` writable.
 */
enum SsStatus ss_structomp(const struct SsDesign *design,
                           const double *y,
                           size_t y_len,
                           const struct SsBlockSet *blocks,
                           const struct SsScheme *scheme,
                           double budget,
                           struct SsPath **out);

/*
 Orthogonal matching pursuit for up to `max_steps` atoms. The selected
 point is the last one.

 # Safety
 `design` must be valid; `y` must point to `y_len` doubles; `out` writable.
 */
enum SsStatus ss_omp(const struct SsDesign *design,
                     const double *y,
                     size_t y_len,
                     size_t max_steps,
                     struct SsPath **out);

/*
 Lasso path on `points` log-spaced values of `λ` from `λ_max` down to
 `ratio · λ_max`, solved to relative KKT tolerance `tol`. The selected
 point is the last one.

 # Safety
 `design` must be valid; `y` must point to `y_len` doubles; `out` writable.
 */
enum SsStatus ss_lasso(const struct SsDesign *design,
                       const double *y,
                       size_t y_len,
                       size_t points,
                       double ratio,
                       double tol,
                       struct SsPath **out);

/*
 # Safety
 `path` must come from a solver call and not be used afterwards.
 */
void ss_path_free(struct SsPath *path);

/*
 Number of points on the path, or 0 for a null handle.

 # Safety
 `path` must be valid or null.
 */
size_t ss_path_len(const struct SsPath *path);

/*
 Index of the solver's own choice along the path.

 # Safety
 `path` must be valid or null.
 */
size_t ss_path_selected(const struct SsPath *path);

/*
 Copies the coefficients of point `index` into `out[0..p]`, and its
 residual norm and complexity into the optional scalars. For baselines
 the complexity is the number of nonzeros.

 # Safety
 `path` must be valid; `out` must point to `p` writable doubles; the
 scalar outputs may be null.
 */
enum SsStatus ss_path_point(const struct SsPath *path,
                            size_t index,
                            double *out,
                            size_t p,
                            double *residual_norm,
                            double *complexity);

/*
 `‖est - truth‖₂ / ‖truth‖₂`.

 # Safety
 `est` and `truth` must point to `len` doubles; `out` must be writable.
 */
enum SsStatus ss_recovery_error(const double *est, const double *truth, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRUCTSPARSE_H */
