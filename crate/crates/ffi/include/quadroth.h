#ifndef QUADROTH_H
#define QUADROTH_H

/* Generated by cbindgen. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QrStatus {
  QR_STATUS_OK = 0,
  QR_STATUS_INVALID_ARGUMENT = 1,
  QR_STATUS_NULL_POINTER = 2,
  QR_STATUS_OVERFLOW = 3,
  QR_STATUS_BUDGET_EXHAUSTED = 4,
  QR_STATUS_INTERNAL = 5,
} QrStatus;

/**
 * Family of subspaces used by [`qr_count_ktrivial`].
 */
typedef enum QrFamily {
  /**
   * One subspace `x_i = x_j` per pair.
   */
  QR_FAMILY_PAIRS = 0,
  /**
   * The diagonal `x_1 = ... = x_s`.
   */
  QR_FAMILY_DIAGONAL = 1,
} QrFamily;

/**
 * Outcome of a colouring search.
 */
typedef enum QrRadoStatus {
  QR_RADO_STATUS_REGULAR_AT_N = 0,
  QR_RADO_STATUS_NO_WITNESS_UP_TO_N = 1,
  QR_RADO_STATUS_EXHAUSTED_BUDGET = 2,
} QrRadoStatus;

/**
 * Opaque majorant.
 */
typedef struct QrMajorant QrMajorant;

/**
 * Opaque W-trick parameters.
 */
typedef struct QrWParams QrWParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *qr_last_error_message(void);

/**
 * Writes `W = 8 * (product of the odd primes up to w)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QrStatus qr_compute_w(uint64_t w, uint64_t *out);

/**
 * Writes the number of residues `z mod modulus` with `z^2 = -b2`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QrStatus qr_sigma_count(uint64_t modulus, uint64_t b2, uint64_t *out);

/**
 * Allocates W-trick parameters; release with [`qr_wparams_free`].
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QrStatus qr_wparams_new(uint64_t x,
                             uint64_t w,
                             uint64_t b1,
                             uint64_t b2,
                             struct QrWParams **out);

/**
 * Releases parameters from [`qr_wparams_new`]. Null is ignored.
 *
 * # Safety
 * `p` must come from [`qr_wparams_new`] and not be used afterwards.
 */
void qr_wparams_free(struct QrWParams *p);

/**
 * Writes `W`, `sigma` and the support length `N` (any out-pointer may be null).
 *
 * # Safety
 * `p` must be a live handle; non-null out-pointers must be valid for writes.
 */
enum QrStatus qr_wparams_info(const struct QrWParams *p,
                              uint64_t *modulus,
                              uint64_t *sigma,
                              uint64_t *n);

/**
 * Builds the W-tricked majorant; release with [`qr_majorant_free`].
 *
 * # Safety
 * `p` must be a live handle and `out` valid for writes.
 */
enum QrStatus qr_majorant_new(const struct QrWParams *p, struct QrMajorant **out);

/**
 * Releases a majorant. Null is ignored.
 *
 * # Safety
 * `m` must come from [`qr_majorant_new`] and not be used afterwards.
 */
void qr_majorant_free(struct QrMajorant *m);

/**
 * Support length `N`; 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
uint64_t qr_majorant_len(const struct QrMajorant *m);

/**
 * Total mass `sum_n nu(n)`; NaN for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
double qr_majorant_mass(const struct QrMajorant *m);

/**
 * Value `nu(n)`, zero off the support; NaN for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
double qr_majorant_value(const struct QrMajorant *m, int64_t n);

/**
 * Writes the real and imaginary parts of the Gauss sum `S(q, a; z)`.
 *
 * # Safety
 * `p` must be a live handle; `re` and `im` valid for writes.
 */
enum QrStatus qr_gauss_sum(const struct QrWParams *p,
                           uint64_t q,
                           int64_t a,
                           int64_t z,
                           double *re,
                           double *im);

/**
 * Writes `sup |nu_hat(alpha) - 1_[1,N]_hat(alpha)| / N` over a grid of
 * `grid_factor * N` points.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for writes.
 */
enum QrStatus qr_decay_sup(const struct QrWParams *p, uint64_t grid_factor, double *out);

/**
 * Counts solutions `x in [1, x_max]^s` of `c . x^2 = 0` lying in the union
 * of the chosen family. Fails with `Overflow` past 2^64.
 *
 * # Safety
 * `coeffs` must point to `len` values and `out` be valid for writes.
 */
enum QrStatus qr_count_ktrivial(const int64_t *coeffs,
                                size_t len,
                                enum QrFamily family,
                                uint64_t x_max,
                                uint64_t *out);

/**
 * Searches `r`-colourings of `[1, n_max]` for the least `n` forcing a
 * monochromatic distinct-entry solution. A zero budget selects the default.
 * An exhausted budget is reported through `status`, not the return value.
 *
 * # Safety
 * `coeffs` must point to `len` values; `n` and `status` valid for writes.
 */
enum QrStatus qr_rado_number(const int64_t *coeffs,
                             size_t len,
                             uint32_t r,
                             uint64_t n_max,
                             uint64_t max_nodes,
                             uint64_t max_millis,
                             uint64_t *n,
                             enum QrRadoStatus *status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUADROTH_H */
