#ifndef GENGM_H
#define GENGM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum GengmStatus {
  GENGM_STATUS_OK = 0,
  GENGM_STATUS_INVALID_INPUT = 1,
  GENGM_STATUS_NUMERIC_FAILURE = 2,
  GENGM_STATUS_SINGULAR_GRADIENT = 3,
  GENGM_STATUS_HYPOTHESIS_VIOLATED = 4,
  GENGM_STATUS_OUTSIDE_VALIDITY_REGION = 5,
  GENGM_STATUS_INVALID_EPSILON = 6,
  GENGM_STATUS_INVALID_REPORT = 7,
  GENGM_STATUS_CAPACITY = 8,
  GENGM_STATUS_CONFIG = 9,
  GENGM_STATUS_SCHEMA = 10,
  GENGM_STATUS_IO = 11,
  GENGM_STATUS_NULL_POINTER = 12,
  GENGM_STATUS_PANIC = 13,
} GengmStatus;

/*
 Estimator flavour.
 */
typedef enum GengmVariant {
  GENGM_VARIANT_GENGM = 0,
  GENGM_VARIANT_GM = 1,
  GENGM_VARIANT_SPR = 2,
  GENGM_VARIANT_ORACLE = 3,
} GengmVariant;

/*
 Sample covariance blocks of a dataset.
 */
typedef struct GengmCovariances GengmCovariances;

/*
 A fitted parameter pair.
 */
typedef struct GengmFit GengmFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *gengm_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *gengm_version(void);

/*
 Builds sample covariances from `x` (`n x p`) and `y` (`n x q`).

 # Safety
 `x` and `y` must point to `n*p` and `n*q` doubles; `out` must be writable.
 */
enum GengmStatus gengm_covariances_from_data(const double *x,
                                             const double *y,
                                             size_t n,
                                             size_t p,
                                             size_t q,
                                             struct GengmCovariances **out);

/*
 # Safety
 `cov` must come from [`gengm_covariances_from_data`] or be NULL.
 */
void gengm_covariances_free(struct GengmCovariances *cov);

/*
 Fits the estimator. `variant` takes a [`GengmVariant`] value;
 `structure` is a `p x p` matrix, or NULL for the first-difference
 operator; `oracle_precision` (`q x q`) is read only by the oracle variant.

 # Safety
 Pointers must be valid for the stated sizes; `out` must be writable.
 */
enum GengmStatus gengm_fit(const struct GengmCovariances *cov,
                           double lambda,
                           double mu,
                           double eta,
                           double beta,
                           const double *structure,
                           int32_t variant,
                           const double *oracle_precision,
                           struct GengmFit **out);

/*
 Writes the response and predictor counts.

 # Safety
 `fit` must be a live handle; `q` and `p` must be writable.
 */
enum GengmStatus gengm_fit_dims(const struct GengmFit *fit, size_t *q, size_t *p);

/*
 Copies `Omega_yy` (`q*q` values, row-major) into `buf`.

 # Safety
 `buf` must be writable for `len` doubles.
 */
enum GengmStatus gengm_fit_omega_yy(const struct GengmFit *fit, double *buf, size_t len);

/*
 Copies `Omega_yx` (`q*p` values, row-major) into `buf`.

 # Safety
 `buf` must be writable for `len` doubles.
 */
enum GengmStatus gengm_fit_omega_yx(const struct GengmFit *fit, double *buf, size_t len);

/*
 Final objective value and convergence flag (1 converged, 0 not).

 # Safety
 `fit` must be a live handle; outputs must be writable.
 */
enum GengmStatus gengm_fit_summary(const struct GengmFit *fit,
                                   double *objective,
                                   int32_t *converged,
                                   size_t *outer_iters);

/*
 # Safety
 `fit` must come from [`gengm_fit`] or be NULL.
 */
void gengm_fit_free(struct GengmFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENGM_H */
