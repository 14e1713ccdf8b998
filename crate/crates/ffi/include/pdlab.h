#ifndef PDLAB_H
#define PDLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a pdlab call. Zero is success; everything else is a failure
 * class mirroring the library's error taxonomy, plus binding-level codes
 * for null pointers, short buffers, and caught panics.
 */
typedef enum PdlabStatus {
  PDLAB_STATUS_OK = 0,
  /**
   * A parameter or input was outside its admissible range.
   */
  PDLAB_STATUS_INVALID_PARAMETER = 1,
  /**
   * Evaluation at (or too close to) a boundary singularity.
   */
  PDLAB_STATUS_SINGULARITY = 2,
  /**
   * Requested accuracy was not reached.
   */
  PDLAB_STATUS_ACCURACY = 3,
  /**
   * Finite-element assembly failed.
   */
  PDLAB_STATUS_ASSEMBLY = 4,
  /**
   * Eigensolver failed.
   */
  PDLAB_STATUS_EIGENSOLVER = 5,
  /**
   * Outside the validity regime of an asymptotic formula.
   */
  PDLAB_STATUS_REGIME = 6,
  /**
   * An optimization or search subroutine failed.
   */
  PDLAB_STATUS_SEARCH_FAILURE = 7,
  /**
   * An I/O error.
   */
  PDLAB_STATUS_IO = 8,
  /**
   * A required pointer argument was null.
   */
  PDLAB_STATUS_NULL_POINTER = 9,
  /**
   * The caller's buffer is too small; the required size was reported.
   */
  PDLAB_STATUS_BUFFER_TOO_SMALL = 10,
  /**
   * An internal panic was caught at the ABI boundary.
   */
  PDLAB_STATUS_PANIC = 11,
} PdlabStatus;

/**
 * Opaque handle to projection-model parameters (θ and the base pmf p).
 */
typedef struct PdlabModel PdlabModel;

/**
 * Opaque deterministic RNG stream handle.
 */
typedef struct PdlabRng PdlabRng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static null-terminated string.
 */
const char *pdlab_version(void);

/**
 * Message describing the most recent failure on the calling thread, as a
 * null-terminated string. Empty if no pdlab call has failed yet. The
 * pointer stays valid until the next failing pdlab call on this thread.
 */
const char *pdlab_last_error_message(void);

/**
 * Creates a deterministic RNG stream for (seed, stream_id). Never fails.
 */
struct PdlabRng *pdlab_rng_new(uint64_t seed, uint64_t stream_id);

/**
 * Derives an independent child stream from an existing one, leaving the
 * parent untouched. Returns null if `rng` is null.
 *
 * # Safety
 * `rng` must be a live handle from `pdlab_rng_new`/`pdlab_rng_substream`.
 */
struct PdlabRng *pdlab_rng_substream(const struct PdlabRng *rng, uint64_t stream_id);

/**
 * Releases an RNG handle. Null is ignored.
 *
 * # Safety
 * `rng` must be null or a live handle; it must not be used afterwards.
 */
void pdlab_rng_free(struct PdlabRng *rng);

/**
 * Draws a standard normal variate into `*out`.
 *
 * # Safety
 * `rng` must be a live handle and `out` a writable f64 location.
 */
enum PdlabStatus pdlab_rng_std_normal(struct PdlabRng *rng, double *out);

/**
 * Draws a uniform variate from the open interval (0, 1) into `*out`.
 *
 * # Safety
 * `rng` must be a live handle and `out` a writable f64 location.
 */
enum PdlabStatus pdlab_rng_unit_open(struct PdlabRng *rng, double *out);

/**
 * Creates a projection model from θ > −1/2 and the d+1 base probabilities
 * `p[0..p_len]` (positive, summing to 1; `p_len` ≥ 2). On success writes the
 * new handle to `*out`.
 *
 * # Safety
 * `p` must point to `p_len` readable f64 values; `out` must be writable.
 */
enum PdlabStatus pdlab_model_new(double theta,
                                 const double *p,
                                 uintptr_t p_len,
                                 struct PdlabModel **out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `m` must be null or a live handle; it must not be used afterwards.
 */
void pdlab_model_free(struct PdlabModel *m);

/**
 * Simplex dimension d of the model (= number of base atoms − 1).
 * Returns 0 if `m` is null.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
uintptr_t pdlab_model_dim(const struct PdlabModel *m);

/**
 * log Γ(x) for x > 0, written to `*out`.
 *
 * # Safety
 * `out` must be a writable f64 location.
 */
enum PdlabStatus pdlab_log_gamma(double x, double *out);

/**
 * Log-density of the projected measure μ^(d) at the interior point with
 * free coordinates `x[0..x_len]` (`x_len` must equal the model dimension).
 *
 * # Safety
 * `m` must be a live handle, `x` readable for `x_len` values, `out` writable.
 */
enum PdlabStatus pdlab_log_density_mu(const struct PdlabModel *m,
                                      const double *x,
                                      uintptr_t x_len,
                                      double *out);

/**
 * Log-density of the Dirichlet(α_1..α_{d+1}) distribution at the interior
 * point with free coordinates `x[0..x_len]` (`x_len` = `alphas_len` − 1).
 *
 * # Safety
 * `alphas` and `x` must be readable for their stated lengths, `out` writable.
 */
enum PdlabStatus pdlab_log_density_dirichlet(const double *alphas,
                                             uintptr_t alphas_len,
                                             const double *x,
                                             uintptr_t x_len,
                                             double *out);

/**
 * Log-ratio W = log Dirichlet(α) − log μ^(d) at the given point, the
 * perturbation potential tying the comparison measure to the projection
 * (Dirichlet = e^W · μ).
 *
 * # Safety
 * Same contracts as `pdlab_log_density_mu` and `pdlab_log_density_dirichlet`.
 */
enum PdlabStatus pdlab_log_perturbation_w(const struct PdlabModel *m,
                                          const double *alphas,
                                          uintptr_t alphas_len,
                                          const double *x,
                                          uintptr_t x_len,
                                          double *out);

/**
 * Localization potential φ(x) = Σ x_i⁻² over all d+1 coordinates, written
 * to `*out`. Infinite on the boundary.
 *
 * # Safety
 * `x` must be readable for `x_len` values, `out` writable.
 */
enum PdlabStatus pdlab_phi(const double *x, uintptr_t x_len, double *out);

/**
 * Minimum of φ over the d-simplex: (d+1)³, attained at the barycenter.
 */
double pdlab_phi_min(uintptr_t d);

/**
 * Super-Poincaré rate exponent in the localization convention.
 */
double pdlab_rate_exponent_localization(double theta, uint32_t d);

/**
 * Super-Poincaré rate exponent in the perturbation convention.
 */
double pdlab_rate_exponent_perturbation(double theta, uint32_t d);

/**
 * Rate exponent as stated in the proof-section variant of the perturbation
 * convention.
 */
double pdlab_rate_exponent_perturbation_proof(double theta, uint32_t d);

/**
 * Closed Γ-product reference value for the tail-integral limit.
 * NaN unless θ > 0.
 */
double pdlab_counterexample_analytic_limit(double theta);

/**
 * Dominated-convergence limit of the normalized tail integrals I_n.
 * NaN unless θ > 0.
 */
double pdlab_counterexample_integrand_limit(double theta);

/**
 * Draws one Beta(a, b) variate into `*out`.
 *
 * # Safety
 * `rng` must be a live handle and `out` a writable f64 location.
 */
enum PdlabStatus pdlab_sample_beta(double a, double b, struct PdlabRng *rng, double *out);

/**
 * Samples one truncated GEM(α, θ) stick-breaking weight sequence, stopping
 * once the residual stick mass drops below `trunc_eps`.
 *
 * On success, writes the number of weights to `*n_written`, the weights in
 * breaking order to `weights[0..*n_written]`, and the residual mass to
 * `*tail_mass`. If the sequence needs more than `capacity` slots, writes the
 * required count to `*n_written`, leaves `weights` untouched, and returns
 * `PDLAB_STATUS_BUFFER_TOO_SMALL`; the RNG stream has advanced either way,
 * so retry with a larger buffer on a fresh (sub)stream to reproduce a draw.
 * `weights` may be null only when `capacity` is 0.
 *
 * # Safety
 * `rng` must be a live handle; `weights` must be writable for `capacity`
 * values (or null with capacity 0); `n_written` and `tail_mass` writable.
 */
enum PdlabStatus pdlab_sample_gem(double alpha,
                                  double theta,
                                  double trunc_eps,
                                  struct PdlabRng *rng,
                                  double *weights,
                                  uintptr_t capacity,
                                  uintptr_t *n_written,
                                  double *tail_mass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDLAB_H */
