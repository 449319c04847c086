#ifndef JACOBI_LATTICE_H
#define JACOBI_LATTICE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JlStatus {
  JL_STATUS_OK = 0,
  JL_STATUS_NULL_POINTER = 1,
  JL_STATUS_DOMAIN = 2,
  JL_STATUS_THRESHOLD = 3,
  JL_STATUS_NOT_CONVERGED = 4,
  JL_STATUS_GRID = 5,
  JL_STATUS_INVALID = 6,
  JL_STATUS_IO = 7,
  JL_STATUS_BUFFER_TOO_SMALL = 8,
  JL_STATUS_PANIC = 9,
} JlStatus;

/**
 * Bound state of `L = L₀ - qP₀`.
 */
typedef struct JlBoundState JlBoundState;

/**
 * Weighted decay curve `D(t)`.
 */
typedef struct JlDecayCurve JlDecayCurve;

/**
 * Spectral kernel table of `e^{-itH}` on `x₁, x₂ ≤ xmax`.
 */
typedef struct JlKernelTable JlKernelTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t jl_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *jl_version(void);

/**
 * `φ_λ(0..len)` into `out`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum JlStatus jl_phi_values(double lambda, double *out, size_t len);

/**
 * `g_λ` and `w^L_λ = g_λ e^{-λ}` for coupling `q > 0`.
 *
 * # Safety
 * `g` and `weight` must be valid pointers to doubles.
 */
enum JlStatus jl_g_factor(double lambda, double q, double *g, double *weight);

/**
 * Deviation of the spectral resolution of the identity at `(x1, x2)`;
 * `q = 0` uses the free operator.
 *
 * # Safety
 * `deviation` must be a valid pointer.
 */
enum JlStatus jl_completeness_deviation(double q, size_t x1, size_t x2, double *deviation);

/**
 * # Safety
 * `handle` must be a valid pointer; on success it receives a handle to be
 * released with `jl_bound_state_free`.
 */
enum JlStatus jl_bound_state_new(double q, struct JlBoundState **handle);

/**
 * # Safety
 * `handle` must come from `jl_bound_state_new`; `lambda0` must be valid.
 */
enum JlStatus jl_bound_state_energy(const struct JlBoundState *handle, double *lambda0);

/**
 * Copies up to `len` entries of the normalized eigenvector; `written`
 * receives the number copied and `total` the stored length.
 *
 * # Safety
 * `handle` must come from `jl_bound_state_new`; `buf` must hold `len`
 * doubles; `written` and `total` must be valid.
 */
enum JlStatus jl_bound_state_vector(const struct JlBoundState *handle,
                                    double *buf,
                                    size_t len,
                                    size_t *written,
                                    size_t *total);

/**
 * # Safety
 * `handle` must be null or come from `jl_bound_state_new`, and not be used
 * afterwards.
 */
void jl_bound_state_free(struct JlBoundState *handle);

/**
 * `q = 0` selects the free operator. Uses the default quadrature.
 *
 * # Safety
 * `times` must hold `ntimes` doubles; `handle` must be valid.
 */
enum JlStatus jl_kernel_table_new(double q,
                                  const double *times,
                                  size_t ntimes,
                                  size_t xmax,
                                  struct JlKernelTable **handle);

/**
 * `K(t_i, x₁, x₂)` with its quadrature error estimate.
 *
 * # Safety
 * `handle` must come from `jl_kernel_table_new`; the out pointers must be
 * valid.
 */
enum JlStatus jl_kernel_table_get(const struct JlKernelTable *handle,
                                  size_t ti,
                                  size_t x1,
                                  size_t x2,
                                  double *re,
                                  double *im,
                                  double *err_est);

/**
 * # Safety
 * `handle` must be null or come from `jl_kernel_table_new`, and not be
 * used afterwards.
 */
void jl_kernel_table_free(struct JlKernelTable *handle);

/**
 * `continuum_only != 0` removes the bound-state projector.
 *
 * # Safety
 * `times` must hold `ntimes` doubles; `handle` must be valid.
 */
enum JlStatus jl_decay_curve_new(double q,
                                 double kappa,
                                 double tau,
                                 size_t xmax,
                                 const double *times,
                                 size_t ntimes,
                                 int32_t continuum_only,
                                 struct JlDecayCurve **handle);

/**
 * Copies `D(t_i)` and the error estimates; both buffers must hold the
 * number of times the curve was built with.
 *
 * # Safety
 * `handle` must come from `jl_decay_curve_new`; `values` and `errors` must
 * hold `len` doubles each (either may be null to skip it).
 */
enum JlStatus jl_decay_curve_values(const struct JlDecayCurve *handle,
                                    double *values,
                                    double *errors,
                                    size_t len);

/**
 * # Safety
 * `handle` must be null or come from `jl_decay_curve_new`, and not be used
 * afterwards.
 */
void jl_decay_curve_free(struct JlDecayCurve *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JACOBI_LATTICE_H */
