#ifndef TSR_FFI_H
#define TSR_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsrStatus {
  TSR_STATUS_OK = 0,
  TSR_STATUS_NULL_POINTER = 1,
  TSR_STATUS_INVALID_ARGUMENT = 2,
  TSR_STATUS_LENGTH_MISMATCH = 3,
  TSR_STATUS_UNSUPPORTED = 4,
  TSR_STATUS_NUMERICAL = 5,
  TSR_STATUS_IO = 6,
  TSR_STATUS_SERIALIZATION = 7,
  TSR_STATUS_PANIC = 8,
} TsrStatus;

/**
 * Opaque problem instance.
 */
typedef struct TsrInstance TsrInstance;

/**
 * Opaque sensing operator.
 */
typedef struct TsrOperator TsrOperator;

/**
 * Opaque state-evolution trajectory.
 */
typedef struct TsrSeTrajectory TsrSeTrajectory;

/**
 * Opaque recovery trace.
 */
typedef struct TsrTrace TsrTrace;

typedef struct TsrComplex {
  double re;
  double im;
} TsrComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *tsr_last_error_message(void);

/**
 * `mmse(eta)` for the Bernoulli-Gaussian prior with sparsity `lambda`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TsrStatus tsr_mmse(double eta, double lambda, double *out);

/**
 * Exact `d mmse / d eta`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TsrStatus tsr_mmse_derivative(double eta, double lambda, double *out);

/**
 * Posterior mean and variance of `x` given `r = x + w`, `w ~ CN(0, 1/eta)`.
 *
 * # Safety
 * `out_mean` and `out_variance` must be valid for writes.
 */
enum TsrStatus tsr_posterior(struct TsrComplex r,
                             double eta,
                             double lambda,
                             struct TsrComplex *out_mean,
                             double *out_variance);

/**
 * Partial DFT with `m` rows of the unitary `n`-point DFT drawn from `seed`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TsrStatus tsr_partial_dft_new(size_t n, size_t m, uint64_t seed, struct TsrOperator **out);

/**
 * Partial DFT keeping the given distinct row indices.
 *
 * # Safety
 * `rows` must point to `m` readable indices; `out` must be valid for writes.
 */
enum TsrStatus tsr_partial_dft_from_rows(size_t n,
                                         const size_t *rows,
                                         size_t m,
                                         struct TsrOperator **out);

/**
 * Dense `m x n` matrix with i.i.d. `CN(0, 1/n)` entries drawn from `seed`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TsrStatus tsr_iid_operator_new(size_t m, size_t n, uint64_t seed, struct TsrOperator **out);

/**
 * # Safety
 * `op` must be null or a handle from this library not yet freed.
 */
void tsr_operator_free(struct TsrOperator *op);

/**
 * # Safety
 * `op` must be a live handle; `out_n` and `out_m` valid for writes.
 */
enum TsrStatus tsr_operator_dims(const struct TsrOperator *op, size_t *out_n, size_t *out_m);

/**
 * `out = A x` with `x` of length `n` and `out` of length `m`.
 *
 * # Safety
 * `op` must be a live handle; `x` readable for `n`, `out` writable for `m`.
 */
enum TsrStatus tsr_operator_forward(const struct TsrOperator *op,
                                    const struct TsrComplex *x,
                                    size_t n,
                                    struct TsrComplex *out,
                                    size_t m);

/**
 * `out = A^H u` with `u` of length `m` and `out` of length `n`.
 *
 * # Safety
 * `op` must be a live handle; `u` readable for `m`, `out` writable for `n`.
 */
enum TsrStatus tsr_operator_adjoint(const struct TsrOperator *op,
                                    const struct TsrComplex *u,
                                    size_t m,
                                    struct TsrComplex *out,
                                    size_t n);

/**
 * Draws a signal and noise from `seed` and observes them through a copy
 * of `op`.
 *
 * # Safety
 * `op` must be a live handle; `out` valid for writes.
 */
enum TsrStatus tsr_instance_generate(const struct TsrOperator *op,
                                     double lambda,
                                     double sigma2,
                                     uint64_t seed,
                                     struct TsrInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library not yet freed.
 */
void tsr_instance_free(struct TsrInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle; `out` writable for `n` elements.
 */
enum TsrStatus tsr_instance_x_true(const struct TsrInstance *inst,
                                   struct TsrComplex *out,
                                   size_t n);

/**
 * # Safety
 * `inst` must be a live handle; `out` writable for `m` elements.
 */
enum TsrStatus tsr_instance_y(const struct TsrInstance *inst, struct TsrComplex *out, size_t m);

/**
 * Turbo signal recovery; requires a partial DFT instance.
 *
 * # Safety
 * `inst` must be a live handle; `out` valid for writes.
 */
enum TsrStatus tsr_run_tsr(const struct TsrInstance *inst,
                           double lambda,
                           size_t t_max,
                           double rel_tol,
                           struct TsrTrace **out);

/**
 * AMP with the Bernoulli-Gaussian MMSE denoiser. `onsager = false`
 * disables the memory term.
 *
 * # Safety
 * `inst` must be a live handle; `out` valid for writes.
 */
enum TsrStatus tsr_run_amp(const struct TsrInstance *inst,
                           double lambda,
                           size_t t_max,
                           double rel_tol,
                           bool onsager,
                           struct TsrTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle from this library not yet freed.
 */
void tsr_trace_free(struct TsrTrace *trace);

/**
 * Number of iterations recorded.
 *
 * # Safety
 * `trace` must be a live handle; `out` valid for writes.
 */
enum TsrStatus tsr_trace_len(const struct TsrTrace *trace, size_t *out);

/**
 * Per-iteration MSE; `len` must equal the trace length.
 *
 * # Safety
 * `trace` must be a live handle; `out` writable for `len` elements.
 */
enum TsrStatus tsr_trace_mse(const struct TsrTrace *trace, double *out, size_t len);

/**
 * Final estimate of the signal.
 *
 * # Safety
 * `trace` must be a live handle; `out` writable for `n` elements.
 */
enum TsrStatus tsr_trace_estimate(const struct TsrTrace *trace, struct TsrComplex *out, size_t n);

/**
 * TSR state evolution from `v = 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TsrStatus tsr_se_tsr(size_t n,
                          size_t m,
                          double sigma2,
                          double lambda,
                          size_t t_max,
                          struct TsrSeTrajectory **out);

/**
 * AMP state evolution for the i.i.d. Gaussian ensemble, from `v = 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum TsrStatus tsr_se_amp(size_t n,
                          size_t m,
                          double sigma2,
                          double lambda,
                          size_t t_max,
                          struct TsrSeTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from this library not yet freed.
 */
void tsr_se_free(struct TsrSeTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle; `out` valid for writes.
 */
enum TsrStatus tsr_se_len(const struct TsrSeTrajectory *traj, size_t *out);

/**
 * Predicted MSE after each iteration; `len` must equal the trajectory length.
 *
 * # Safety
 * `traj` must be a live handle; `out` writable for `len` elements.
 */
enum TsrStatus tsr_se_predicted_mse(const struct TsrSeTrajectory *traj, double *out, size_t len);

/**
 * SNR at the last computed point and whether the recursion converged.
 *
 * # Safety
 * `traj` must be a live handle; the outputs valid for writes.
 */
enum TsrStatus tsr_se_fixed_point(const struct TsrSeTrajectory *traj,
                                  double *out_eta,
                                  bool *out_converged);

/**
 * Runs a Monte Carlo experiment described by a JSON config (missing fields
 * take their defaults) and returns the JSON report. Free the result with
 * [`tsr_string_free`].
 *
 * # Safety
 * `config_json` must be a nul-terminated string; `out` valid for writes.
 */
enum TsrStatus tsr_run_experiment_json(const char *config_json, char **out);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void tsr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSR_FFI_H */
