#ifndef LMCF_H
#define LMCF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LmcfStatus {
  LMCF_STATUS_OK = 0,
  LMCF_STATUS_NULL_POINTER = 1,
  LMCF_STATUS_INVALID_ARGUMENT = 2,
  LMCF_STATUS_NUMERICAL = 3,
  LMCF_STATUS_OUTSIDE_DOMAIN = 4,
  LMCF_STATUS_EMPTY_LEVEL = 5,
  LMCF_STATUS_ON_FIXED_LEVEL = 6,
  LMCF_STATUS_PROJECTION_FAILURE = 7,
  LMCF_STATUS_BUFFER_TOO_SMALL = 8,
  LMCF_STATUS_NOT_FOUND = 9,
  LMCF_STATUS_PANIC = 10,
} LmcfStatus;

/**
 * ALE quotient with a circle action `H_{a,b}`.
 */
typedef struct LmcfAle LmcfAle;

/**
 * Flat self-shrinker model on `C^d`.
 */
typedef struct LmcfShrinker LmcfShrinker;

/**
 * Result of a flow integration.
 */
typedef struct LmcfTrajectory LmcfTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, NUL-terminated and static.
 */
const char *lmcf_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t lmcf_last_error_message(char *buf, uintptr_t len);

/**
 * Creates an ALE quotient with `n` parameters `alpha[0..n]`, offset `h0`
 * and the circle action `(a, b)`.
 *
 * # Safety
 * `alpha` must be valid for `n` reads and `out` for one write.
 */
enum LmcfStatus lmcf_ale_new(uintptr_t n,
                             const double *alpha,
                             double h0,
                             int64_t a,
                             int64_t b,
                             struct LmcfAle **out);

/**
 * Releases an ALE handle. Null is ignored.
 *
 * # Safety
 * `h` must come from `lmcf_ale_new` and not be used afterwards.
 */
void lmcf_ale_free(struct LmcfAle *h);

/**
 * Number of real-slice coordinates of a point, `2(n+1)`.
 *
 * # Safety
 * `h` must be a live handle or null (returns 0).
 */
uintptr_t lmcf_ale_slice_dim(const struct LmcfAle *h);

/**
 * Moment image `(x, y)` of the fixed point `P_k`.
 *
 * # Safety
 * `h` must be a live handle, `out_xy` valid for two writes.
 */
enum LmcfStatus lmcf_ale_vertex(const struct LmcfAle *h, uintptr_t k, double *out_xy);

/**
 * Real-slice point `(z_0..z_n, w_0..w_n)` over `(x, y)` on sheet `0..4`
 * (`++, -+, +-, --`).
 *
 * # Safety
 * `h` must be a live handle, `out` valid for `len` writes.
 */
enum LmcfStatus lmcf_ale_solve_level(const struct LmcfAle *h,
                                     double x,
                                     double y,
                                     uint32_t sheet,
                                     double *out,
                                     uintptr_t len);

/**
 * Moment image of a real-slice point of length `2(n+1)`.
 *
 * # Safety
 * `h` must be a live handle, `point` valid for `len` reads, `out_xy` for two writes.
 */
enum LmcfStatus lmcf_ale_mu_g(const struct LmcfAle *h,
                              const double *point,
                              uintptr_t len,
                              double *out_xy);

/**
 * Singular times `t_0..t_n` of the level `c0` and the first singular
 * vertex. `out_k0` is set to -1 and `out_t` to NaN when the flow never
 * becomes singular.
 *
 * # Safety
 * `h` must be a live handle, `out_times` valid for `len` writes, the
 * scalar outputs for one write each.
 */
enum LmcfStatus lmcf_ale_schedule(const struct LmcfAle *h,
                                  double c0,
                                  double *out_times,
                                  uintptr_t len,
                                  int64_t *out_k0,
                                  double *out_t);

/**
 * Weights `(λ1, λ2)` of the action in the chart at `P_k0`.
 *
 * # Safety
 * `h` must be a live handle, outputs valid for one write each.
 */
enum LmcfStatus lmcf_ale_blowup_weights(const struct LmcfAle *h,
                                        uintptr_t k0,
                                        int64_t *out_l1,
                                        int64_t *out_l2);

/**
 * Integrates `per_sheet` seeds on each sheet of the level `c0` up to
 * `horizon` (or just before the first singular time). `step <= 0` selects
 * the default step.
 *
 * # Safety
 * `h` must be a live handle, `out` valid for one write.
 */
enum LmcfStatus lmcf_ale_flow(const struct LmcfAle *h,
                              double c0,
                              uintptr_t per_sheet,
                              double horizon,
                              double step,
                              struct LmcfTrajectory **out);

/**
 * Creates a flat shrinker with nonzero integer weights `weights[0..d]`.
 *
 * # Safety
 * `weights` must be valid for `d` reads and `out` for one write.
 */
enum LmcfStatus lmcf_shrinker_new(const int64_t *weights, uintptr_t d, struct LmcfShrinker **out);

/**
 * Releases a shrinker handle. Null is ignored.
 *
 * # Safety
 * `h` must come from `lmcf_shrinker_new` and not be used afterwards.
 */
void lmcf_shrinker_free(struct LmcfShrinker *h);

/**
 * Soliton constant `α_c` of the level `c`.
 *
 * # Safety
 * `h` must be a live handle, `out` valid for one write.
 */
enum LmcfStatus lmcf_shrinker_alpha_c(const struct LmcfShrinker *h, double c, double *out);

/**
 * Integrates `count` seeds of the level `c0` drawn with `seed`.
 *
 * # Safety
 * `h` must be a live handle, `out` valid for one write.
 */
enum LmcfStatus lmcf_shrinker_flow(const struct LmcfShrinker *h,
                                   double c0,
                                   uintptr_t count,
                                   uint64_t seed,
                                   double horizon,
                                   double step,
                                   struct LmcfTrajectory **out);

/**
 * Releases a trajectory. Null is ignored.
 *
 * # Safety
 * `t` must come from a flow call and not be used afterwards.
 */
void lmcf_trajectory_free(struct LmcfTrajectory *t);

/**
 * Number of time samples (0 for null).
 *
 * # Safety
 * `t` must be a live trajectory or null.
 */
uintptr_t lmcf_trajectory_samples(const struct LmcfTrajectory *t);

/**
 * Number of seeds (0 for null).
 *
 * # Safety
 * `t` must be a live trajectory or null.
 */
uintptr_t lmcf_trajectory_seeds(const struct LmcfTrajectory *t);

/**
 * Coordinates per point (0 for null).
 *
 * # Safety
 * `t` must be a live trajectory or null.
 */
uintptr_t lmcf_trajectory_dim(const struct LmcfTrajectory *t);

/**
 * Largest drift-law residual (NaN for null).
 *
 * # Safety
 * `t` must be a live trajectory or null.
 */
double lmcf_trajectory_max_drift(const struct LmcfTrajectory *t);

/**
 * Time of sample `i`.
 *
 * # Safety
 * `t` must be a live trajectory, `out` valid for one write.
 */
enum LmcfStatus lmcf_trajectory_time(const struct LmcfTrajectory *t, uintptr_t i, double *out);

/**
 * Position of seed `s` at sample `i`.
 *
 * # Safety
 * `t` must be a live trajectory, `out` valid for `len` writes.
 */
enum LmcfStatus lmcf_trajectory_point(const struct LmcfTrajectory *t,
                                      uintptr_t i,
                                      uintptr_t s,
                                      double *out,
                                      uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LMCF_H */
