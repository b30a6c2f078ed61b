#ifndef BRANCHPROB_H
#define BRANCHPROB_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BpStatus {
  BP_STATUS_OK = 0,
  BP_STATUS_NULL_POINTER = 1,
  BP_STATUS_INVALID_ARGUMENT = 2,
  BP_STATUS_NUMERICAL = 3,
  BP_STATUS_IO = 4,
  BP_STATUS_PANIC = 5,
} BpStatus;

/**
 * A transition matrix, plus solver details when it came from a recovery.
 */
typedef struct BpMatrix BpMatrix;

/**
 * A model together with its ODE tolerances.
 */
typedef struct BpModel BpModel;

/**
 * ADMM settings. `d1_exp` and `d2_exp` set the tolerance scales `N^d`.
 */
typedef struct BpAdmmConfig {
  double beta;
  double lambda;
  double eps_abs;
  double eps_rel;
  double d1_exp;
  double d2_exp;
  size_t max_iter;
} BpAdmmConfig;

/**
 * Accelerated proximal-gradient settings.
 */
typedef struct BpPgdConfig {
  double lambda;
  double l0;
  double c;
  size_t max_iter;
  double tol;
} BpPgdConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *bp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bp_version(void);

/**
 * HSC model with rates `rho`, `nu`, `mu` at time `t` from `(init1, init2)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BpStatus bp_model_hsc(double rho,
                           double nu,
                           double mu,
                           double t,
                           uint32_t init1,
                           uint32_t init2,
                           struct BpModel **out);

/**
 * BDS model with rates `gamma`, `sigma`, `delta` at time `t`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BpStatus bp_model_bds(double gamma,
                           double sigma,
                           double delta,
                           double t,
                           uint32_t init1,
                           uint32_t init2,
                           struct BpModel **out);

/**
 * Model from the JSON config schema; an `ode` block sets tolerances and
 * solver blocks are accepted but ignored.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` as for [`bp_model_hsc`].
 */
enum BpStatus bp_model_from_json(const char *json, struct BpModel **out);

/**
 * # Safety
 * `model` must be null or a handle from a `bp_model_*` constructor that
 * has not been freed.
 */
void bp_model_free(struct BpModel *model);

/**
 * Generating function at `(s1, s2)`, written to `out_re` and `out_im`.
 *
 * # Safety
 * `model` must be a live handle; `out_re` and `out_im` valid for writes.
 */
enum BpStatus bp_pgf(const struct BpModel *model,
                     double s1_re,
                     double s1_im,
                     double s2_re,
                     double s2_im,
                     double *out_re,
                     double *out_im);

/**
 * Full `n×n` grid evaluation and inversion.
 *
 * # Safety
 * `model` must be a live handle; `out` valid for one handle write.
 */
enum BpStatus bp_solve_full(const struct BpModel *model, size_t n, struct BpMatrix **out);

/**
 * Reference measurement count for the model type at grid size `n`.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum BpStatus bp_reference_m(const struct BpModel *model, size_t n, size_t *out);

/**
 * Tuned ADMM settings for this model type, `n` and `m`.
 *
 * # Safety
 * `model` must be a live handle; `out` valid for writes.
 */
enum BpStatus bp_admm_config_reference(const struct BpModel *model,
                                       size_t n,
                                       size_t m,
                                       struct BpAdmmConfig *out);

/**
 * Default PGD settings for this model type and `m`.
 *
 * # Safety
 * `model` must be a live handle; `out` valid for writes.
 */
enum BpStatus bp_pgd_config_reference(const struct BpModel *model,
                                      size_t m,
                                      struct BpPgdConfig *out);

/**
 * ADMM recovery from `m×m` PGF samples on indices drawn with `seed`. A
 * null `config` selects [`bp_admm_config_reference`].
 *
 * # Safety
 * `model` must be a live handle, `config` null or valid, `out` valid.
 */
enum BpStatus bp_recover_admm(const struct BpModel *model,
                              size_t n,
                              size_t m,
                              uint64_t seed,
                              const struct BpAdmmConfig *config,
                              struct BpMatrix **out);

/**
 * PGD recovery; arguments as for [`bp_recover_admm`].
 *
 * # Safety
 * As for [`bp_recover_admm`].
 */
enum BpStatus bp_recover_pgd(const struct BpModel *model,
                             size_t n,
                             size_t m,
                             uint64_t seed,
                             const struct BpPgdConfig *config,
                             struct BpMatrix **out);

/**
 * Side length `n` of the matrix, or 0 for null.
 *
 * # Safety
 * `matrix` must be null or a live handle.
 */
size_t bp_matrix_size(const struct BpMatrix *matrix);

/**
 * `P(X(t) = (l, m))`.
 *
 * # Safety
 * `matrix` must be a live handle; `out` valid for writes.
 */
enum BpStatus bp_matrix_get(const struct BpMatrix *matrix, size_t l, size_t m, double *out);

/**
 * Copies all `n²` entries, row-major, into `buf` of length `len`.
 *
 * # Safety
 * `matrix` must be a live handle; `buf` valid for `len` writes.
 */
enum BpStatus bp_matrix_copy(const struct BpMatrix *matrix, double *buf, size_t len);

/**
 * Solver iterations behind the matrix, 0 for direct inversion.
 *
 * # Safety
 * `matrix` must be null or a live handle.
 */
size_t bp_matrix_iterations(const struct BpMatrix *matrix);

/**
 * Whether the solver met its stopping rule; always true for direct
 * inversion, false for null.
 *
 * # Safety
 * `matrix` must be null or a live handle.
 */
bool bp_matrix_converged(const struct BpMatrix *matrix);

/**
 * # Safety
 * `matrix` must be null or a handle not yet freed.
 */
void bp_matrix_free(struct BpMatrix *matrix);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRANCHPROB_H */
