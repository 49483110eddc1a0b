#ifndef LYAPCERT_H
#define LYAPCERT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LyapcertStatus {
  LYAPCERT_STATUS_OK = 0,
  LYAPCERT_STATUS_INVALID_ARGUMENT = 1,
  LYAPCERT_STATUS_OUT_OF_RANGE = 2,
  LYAPCERT_STATUS_NOT_NESTEROV_FAMILY = 3,
  LYAPCERT_STATUS_POLE = 4,
  LYAPCERT_STATUS_NUMERICAL = 5,
  LYAPCERT_STATUS_NULL_POINTER = 6,
  LYAPCERT_STATUS_PANIC = 7,
} LyapcertStatus;

typedef struct LyapcertContinuous LyapcertContinuous;

typedef struct LyapcertDiscrete LyapcertDiscrete;

typedef struct LyapcertDiscreteSummary {
  double alpha;
  double beta;
  double delta;
  double b;
  double r;
  double rho_sq;
  double p11;
  double p12;
  double p22;
  /**
   * Ascending.
   */
  double t_eigenvalues[3];
  bool valid;
} LyapcertDiscreteSummary;

typedef struct LyapcertContinuousSummary {
  double m;
  double b_bar;
  double r_bar;
  double lambda;
  double p11;
  double p12;
  double p22;
  double t_eigenvalues[3];
  bool conservative;
  bool valid;
} LyapcertContinuousSummary;

typedef struct LyapcertAppendixPoint {
  double kappa;
  double r_bar;
  double s_bar;
  double b_bar;
  double p11_over_m;
  double p12_over_m;
  double p22_over_m;
  bool valid;
} LyapcertAppendixPoint;

typedef struct LyapcertScanSummary {
  double kappa;
  double c;
  double delta;
  double beta;
  double gamma;
  size_t samples;
  double best_lambda_max;
  double contradiction;
  bool feasible;
} LyapcertScanSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length excluding the NUL.
 * Returns 0 when there is no error. `buf` may be NULL to query the length.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t lyapcert_last_error(char *buf, size_t len);

/**
 * Static version string.
 */
const char *lyapcert_version(void);

/**
 * Certifies `x_{k+1} = x_k + β(x_k − x_{k−1}) − α∇f(x_k + γ(x_k − x_{k−1}))`
 * on the class `(m, L)`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free with
 * [`lyapcert_discrete_free`].
 */
enum LyapcertStatus lyapcert_discrete_certify(double m,
                                              double l,
                                              double alpha,
                                              double beta,
                                              double gamma,
                                              struct LyapcertDiscrete **out);

/**
 * Certificate for `α = 1/L` and the accelerated momentum.
 *
 * # Safety
 * As for [`lyapcert_discrete_certify`].
 */
enum LyapcertStatus lyapcert_discrete_optimal(double m, double l, struct LyapcertDiscrete **out);

/**
 * # Safety
 * `h` must be a live handle; `out` must be a valid pointer.
 */
enum LyapcertStatus lyapcert_discrete_summary(const struct LyapcertDiscrete *h,
                                              struct LyapcertDiscreteSummary *out);

/**
 * Constant `C` in `f(x_k) − f* ≤ C ρ^{2k}` for a start in dimension `dim`.
 *
 * # Safety
 * `h` must be a live handle; `x0_minus_xm1` and `x0_minus_xstar` must point
 * to `dim` readable doubles; `out` must be a valid pointer.
 */
enum LyapcertStatus lyapcert_discrete_bound_constant(const struct LyapcertDiscrete *h,
                                                     double gap0,
                                                     const double *x0_minus_xm1,
                                                     const double *x0_minus_xstar,
                                                     size_t dim,
                                                     double *out);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void lyapcert_discrete_free(struct LyapcertDiscrete *h);

/**
 * Certifies `ẍ + b̄√m ẋ + ∇f(x) = 0`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free with
 * [`lyapcert_continuous_free`].
 */
enum LyapcertStatus lyapcert_continuous_certify(double m,
                                                double b_bar,
                                                struct LyapcertContinuous **out);

/**
 * # Safety
 * `h` must be a live handle; `out` must be a valid pointer.
 */
enum LyapcertStatus lyapcert_continuous_summary(const struct LyapcertContinuous *h,
                                                struct LyapcertContinuousSummary *out);

/**
 * # Safety
 * `h` must be NULL or a handle not yet freed.
 */
void lyapcert_continuous_free(struct LyapcertContinuous *h);

/**
 * Rate variable `r` on the discrete curve; `delta = 0` selects the ODE curve.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LyapcertStatus lyapcert_solve_r(double b, double delta, double *out);

/**
 * Best ODE rate with the smoothness multiplier at condition number `kappa`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LyapcertStatus lyapcert_appendix_max_rate(double kappa, struct LyapcertAppendixPoint *out);

/**
 * Random search for a Heavy Ball certificate (`gamma_equals_beta` runs the
 * Nesterov control instead).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LyapcertStatus lyapcert_hb_scan(double kappa,
                                     double c,
                                     size_t samples,
                                     uint64_t seed,
                                     bool gamma_equals_beta,
                                     struct LyapcertScanSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LYAPCERT_H */
