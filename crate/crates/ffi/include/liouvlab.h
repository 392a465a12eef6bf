#ifndef LIOUVLAB_H
#define LIOUVLAB_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every exported function.
 */
typedef enum LlStatus {
  LL_STATUS_OK = 0,
  LL_STATUS_NULL_POINTER = 1,
  /**
   * Bad parameter, dimension or buffer length.
   */
  LL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation itself failed (no convergence, no steady state, ...).
   */
  LL_STATUS_NUMERICAL = 3,
  /**
   * A Rust panic was caught at the boundary.
   */
  LL_STATUS_PANIC = 4,
} LlStatus;

/**
 * Opaque handle to a qubit or qutrit with fixed drive and rates.
 */
typedef struct LlSystem LlSystem;

/**
 * Parameters of `A e^{-Γt} sin(ωt + φ) + C`.
 */
typedef struct LlFit {
  double omega;
  double gamma;
  double amplitude;
  double phase;
  double offset;
  double residual_rms;
  bool converged;
} LlFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after success-only use.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ll_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ll_version(void);

/**
 * Creates a system of dimension `dim` (2 or 3). Qubits ignore `gamma_f` and
 * `gamma_f_extra`. Release with [`ll_system_free`].
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum LlStatus ll_system_new(uint32_t dim,
                            double j,
                            double delta,
                            double gamma_e,
                            double gamma_phi,
                            double gamma_f,
                            double gamma_f_extra,
                            struct LlSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle not yet freed.
 */
void ll_system_free(struct LlSystem *sys);

/**
 * Hilbert-space dimension of `sys`, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
uint32_t ll_system_dim(const struct LlSystem *sys);

/**
 * Replaces the drive of `sys`.
 *
 * # Safety
 * `sys` must be a live handle.
 */
enum LlStatus ll_system_set_drive(struct LlSystem *sys, double j, double delta);

/**
 * The `d²` Liouvillian eigenvalues, ascending real part.
 *
 * # Safety
 * `re` and `im` must be valid for `len` writes; `len` must equal `d²`.
 */
enum LlStatus ll_spectrum(const struct LlSystem *sys, double *re, double *im, size_t len);

/**
 * Steady-state density matrix, row-major, `len = d²`.
 *
 * # Safety
 * `re` and `im` must be valid for `len` writes.
 */
enum LlStatus ll_steady_state(const struct LlSystem *sys, double *re, double *im, size_t len);

/**
 * Populations `ρ_kk(t)` on a time grid, written row-major as `n_times × d`.
 *
 * # Safety
 * `rho0_re`/`rho0_im` hold `d²` entries, `times` holds `n_times`, and
 * `populations` must be valid for `n_times · d` writes.
 */
enum LlStatus ll_evolve_populations(const struct LlSystem *sys,
                                    const double *rho0_re,
                                    const double *rho0_im,
                                    const double *times,
                                    size_t n_times,
                                    double *populations);

/**
 * Qubit population-EP coupling `J_EP`; fails when the rates admit none.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum LlStatus ll_qubit_ep_coupling(double gamma_e, double gamma_phi, double *out);

/**
 * Least-squares fit of a damped sinusoid to `n` samples.
 *
 * # Safety
 * `times` and `values` must hold `n` entries; `out` must be valid for one write.
 */
enum LlStatus ll_fit_damped_sine(const double *times,
                                 const double *values,
                                 size_t n,
                                 struct LlFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIOUVLAB_H */
