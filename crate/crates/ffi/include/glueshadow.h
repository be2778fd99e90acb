#ifndef GLUESHADOW_H
#define GLUESHADOW_H

/* Generated by cbindgen from the glueshadow-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum GsStatus {
  GS_STATUS_OK = 0,
  /**
   * The computation finished but the checked bound does not hold.
   */
  GS_STATUS_BOUND_FAILURE = 1,
  /**
   * Invalid arguments or parameters.
   */
  GS_STATUS_USAGE = 2,
  /**
   * Root finding, gluing or merging failed.
   */
  GS_STATUS_NUMERICAL = 3,
  GS_STATUS_NULL_POINTER = 4,
  GS_STATUS_PANIC = 5,
} GsStatus;

/**
 * A map of the interval, the plane or the torus.
 */
typedef struct GsMap GsMap;

/**
 * A pseudo-trajectory together with its gaps and moments.
 */
typedef struct GsPseudo GsPseudo;

/**
 * Result of a parallel-gluing run.
 */
typedef struct GsReport GsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *gs_last_error_message(void);

/**
 * `Tx = a x` on `[0, c)` and `b x + 1 - b` on `[c, 1]`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum GsStatus gs_map_new_piecewise_linear(double a, double b, double c, struct GsMap **out);

/**
 * Interval map with neutral fixed points at 0 and 1.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum GsStatus gs_map_new_neutral(double alpha, double c, struct GsMap **out);

/**
 * Affine map of the plane with eigenvalues `λ1 > 1 > λ2 > 0` along
 * `e1`, `e2` (two doubles each) and translation `offset`.
 *
 * # Safety
 * `e1`, `e2` and `offset` must point to two readable doubles; `out` must be
 * valid for a pointer write.
 */
enum GsStatus gs_map_new_affine(double lambda1,
                                double lambda2,
                                const double *e1,
                                const double *e2,
                                const double *offset,
                                struct GsMap **out);

/**
 * Linear automorphism of the torus given by a row-major integer matrix.
 *
 * # Safety
 * `m` must point to four readable integers; `out` must be valid for a
 * pointer write.
 */
enum GsStatus gs_map_new_torus(const int64_t *m, struct GsMap **out);

/**
 * # Safety
 * `map` must be null or a handle not yet freed.
 */
void gs_map_free(struct GsMap *map);

/**
 * Number of coordinates of a point (1 or 2), 0 for a null map.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t gs_map_dim(const struct GsMap *map);

/**
 * # Safety
 * `map` must be null or a live handle.
 */
size_t gs_map_branch_count(const struct GsMap *map);

/**
 * `out = T x`. Interval points are clamped into `[0, 1]`, torus points
 * reduced mod 1.
 *
 * # Safety
 * `x` and `out` must hold `gs_map_dim(map)` doubles.
 */
enum GsStatus gs_map_forward(const struct GsMap *map, const double *x, double *out);

/**
 * `out = T_v^{-1} y`, the preimage of `y` in the branch containing `v`.
 *
 * # Safety
 * `v`, `y` and `out` must hold `gs_map_dim(map)` doubles.
 */
enum GsStatus gs_map_inverse_branch(const struct GsMap *map,
                                    const double *v,
                                    const double *y,
                                    double *out);

/**
 * Random pseudo-trajectory of `len` points. `kind` is 0 (uniform),
 * 1 (small on average) or 2 (rare); `amplitude_cap` is `D`.
 *
 * # Safety
 * `map` must be a live handle; `out` must be valid for a pointer write.
 */
enum GsStatus gs_pseudo_generate(const struct GsMap *map,
                                 int kind,
                                 double epsilon,
                                 double amplitude_cap,
                                 uint64_t seed,
                                 size_t len,
                                 struct GsPseudo **out);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void gs_pseudo_free(struct GsPseudo *p);

/**
 * Number of points, 0 for null.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t gs_pseudo_len(const struct GsPseudo *p);

/**
 * Number of indices with a non-zero gap, 0 for null.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t gs_pseudo_moment_count(const struct GsPseudo *p);

/**
 * Merges the true segments of `p` by parallel gluing.
 *
 * # Safety
 * `map` and `p` must be live handles; `out` must be valid for a pointer
 * write.
 */
enum GsStatus gs_parallel_glue(const struct GsMap *map,
                               const struct GsPseudo *p,
                               struct GsReport **out);

/**
 * # Safety
 * `r` must be null or a handle not yet freed.
 */
void gs_report_free(struct GsReport *r);

/**
 * `sup_t ρ(z_t, y_t)`, NaN for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double gs_report_uniform_error(const struct GsReport *r);

/**
 * Limsup estimate of the running mean errors, NaN for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double gs_report_q_limsup(const struct GsReport *r);

/**
 * Largest error over the outer halves of the window, NaN for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double gs_report_limit_error(const struct GsReport *r);

/**
 * Largest `ρ(T z_i, z_{i+1})` of the merged orbit, NaN for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double gs_report_defect(const struct GsReport *r);

/**
 * Number of merge levels, 0 for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t gs_report_level_count(const struct GsReport *r);

/**
 * Copies point `i` (0-based within the window) of the merged orbit.
 *
 * # Safety
 * `r` must be a live handle; `out` must hold the map's dimension in doubles.
 */
enum GsStatus gs_report_point(const struct GsReport *r, size_t i, double *out);

/**
 * Checks the shadowing bound for a perturbation `kind` (as in
 * [`gs_pseudo_generate`]) and functional `functional` (0 uniform,
 * 1 average, 2 limit). Writes the bound (NaN when none applies) and
 * returns `Ok` or `BoundFailure`.
 *
 * # Safety
 * `r` must be a live handle; `bound` must be null or writable.
 */
enum GsStatus gs_report_check(const struct GsReport *r,
                              int kind,
                              int functional,
                              double epsilon,
                              double *bound);

/**
 * Writes the per-index CSV of the run (`y` is the pseudo-trajectory it was
 * computed from) to the UTF-8 path `path`.
 *
 * # Safety
 * `r` and `p` must be live handles; `path` must be a NUL-terminated string.
 */
enum GsStatus gs_report_write_csv(const struct GsReport *r,
                                  const struct GsPseudo *p,
                                  const char *path);

/**
 * One inverse step of `τ(v) = v + R v^{1+α}` with its lower and upper
 * estimates. `ordered` receives 1 when `u ≤ τ^{-1}(v) ≤ w`.
 *
 * # Safety
 * Every output pointer must be null or writable.
 */
enum GsStatus gs_neutral_one_step_bounds(double r,
                                         double alpha,
                                         double v,
                                         double *u,
                                         double *inv,
                                         double *w,
                                         int *ordered);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLUESHADOW_H */
