#ifndef FERMICHAIN_H
#define FERMICHAIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fermichain call.
 */
typedef enum {
  FC_STATUS_OK = 0,
  FC_STATUS_ERR_NULL_POINTER = 1,
  FC_STATUS_ERR_INVALID_ARGUMENT = 2,
  FC_STATUS_ERR_SINGULAR = 3,
  FC_STATUS_ERR_NOT_CONVERGED = 4,
  FC_STATUS_ERR_OUT_OF_RANGE = 5,
  FC_STATUS_ERR_NUMERICAL = 6,
} FcStatus;

/**
 * Opaque covariance truncation handle.
 */
typedef struct FcCovariance FcCovariance;

/**
 * Opaque reduced density matrix handle.
 */
typedef struct FcDensityMatrix FcDensityMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Human-readable description of a status code (static storage).
 */
const char *fc_status_message(FcStatus status);

/**
 * Library version as a static C string.
 */
const char *fc_version(void);

/**
 * Build the XY covariance truncation on the window `[lo, hi)`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle that
 * must be released with [`fc_covariance_free`].
 */
FcStatus fc_covariance_build(double gamma,
                             double lambda,
                             int64_t lo,
                             int64_t hi,
                             FcCovariance **out);

/**
 * # Safety
 * `handle` must come from [`fc_covariance_build`] and not be freed twice.
 */
void fc_covariance_free(FcCovariance *handle);

/**
 * Row count of the (square) covariance matrix: `2 * window length`.
 *
 * # Safety
 * `handle` must be a live covariance handle.
 */
uintptr_t fc_covariance_dim(const FcCovariance *handle);

/**
 * # Safety
 * `handle` must be live; `re`, `im` must be valid pointers.
 */
FcStatus fc_covariance_complex_entry(const FcCovariance *handle,
                                     uintptr_t row,
                                     uintptr_t col,
                                     double *re,
                                     double *im);

/**
 * # Safety
 * `handle` must be live; `val` must be a valid pointer.
 */
FcStatus fc_covariance_majorana_entry(const FcCovariance *handle,
                                      uintptr_t row,
                                      uintptr_t col,
                                      double *val);

/**
 * Pfaffian of a real antisymmetric matrix given row-major.
 *
 * # Safety
 * `data` must point to `dim * dim` doubles; `out` must be valid.
 */
FcStatus fc_pfaffian(const double *data, uintptr_t dim, double *out);

/**
 * Expectation of a Pauli string: `sites[i]` carries letter `letters[i]`
 * (0 = X, 1 = Y, 2 = Z).
 *
 * # Safety
 * `sites` and `letters` must point to `n` elements; `out` must be valid.
 */
FcStatus fc_pauli_expectation(const FcCovariance *handle,
                              const int64_t *sites,
                              const uint8_t *letters,
                              uintptr_t n,
                              double *out);

/**
 * Reconstruct the reduced density matrix on `sites`.
 *
 * # Safety
 * `sites` must point to `n` distinct sites inside the covariance window;
 * `out` receives a handle to release with [`fc_density_matrix_free`].
 */
FcStatus fc_rdm_build(const FcCovariance *handle,
                      const int64_t *sites,
                      uintptr_t n,
                      FcDensityMatrix **out);

/**
 * # Safety
 * `handle` must come from [`fc_rdm_build`] and not be freed twice.
 */
void fc_density_matrix_free(FcDensityMatrix *handle);

/**
 * # Safety
 * `handle` must be a live density-matrix handle.
 */
uintptr_t fc_density_matrix_dim(const FcDensityMatrix *handle);

/**
 * Entry of the raw reconstructed matrix.
 *
 * # Safety
 * `handle` must be live; `re`, `im` must be valid pointers.
 */
FcStatus fc_density_matrix_entry(const FcDensityMatrix *handle,
                                 uintptr_t row,
                                 uintptr_t col,
                                 double *re,
                                 double *im);

/**
 * `tr(X_N)` on the window `[-N, N)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FcStatus fc_trace_x(double gamma, double lambda, int64_t n, double *out);

/**
 * `‖E_N − F_N‖²_HS`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FcStatus fc_hs_norm_e_minus_f(double gamma, double lambda, int64_t n, double *out);

/**
 * `‖E_N − θ₋E_Nθ₋‖²_HS`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FcStatus fc_hs_norm_theta(double gamma, double lambda, int64_t n, double *out);

/**
 * Block entropy `S(L)` in bits for the block `[0, L)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FcStatus fc_block_entropy(double gamma, double lambda, uint32_t block_len, double *out);

/**
 * Majorization one-copy entanglement of the block `[0, L)`.
 *
 * # Safety
 * `d_out` and `e1_out` must be valid pointers.
 */
FcStatus fc_one_copy(double gamma,
                     double lambda,
                     uint32_t block_len,
                     uint64_t *d_out,
                     double *e1_out);

/**
 * Two-qubit CHSH value from the correlation-matrix criterion.
 *
 * # Safety
 * `out` must be a valid pointer; the handle must hold a two-qubit state.
 */
FcStatus fc_chsh_beta(const FcDensityMatrix *handle, double *out);

/**
 * Logarithmic negativity across the cut whose A side is `cut_a`.
 *
 * # Safety
 * `cut_a` must point to `n_a` sites of the state; `out` must be valid.
 */
FcStatus fc_log_negativity(const FcDensityMatrix *handle,
                           const int64_t *cut_a,
                           uintptr_t n_a,
                           double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FERMICHAIN_H */
