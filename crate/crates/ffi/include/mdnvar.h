#ifndef MDNVAR_H
#define MDNVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MdnvarStatus {
  MDNVAR_STATUS_OK = 0,
  MDNVAR_STATUS_NULL_POINTER = 1,
  MDNVAR_STATUS_IO = 2,
  MDNVAR_STATUS_DATA = 3,
  MDNVAR_STATUS_NUMERIC = 4,
  MDNVAR_STATUS_INVALID_ARGUMENT = 5,
  MDNVAR_STATUS_BUFFER_TOO_SMALL = 6,
  MDNVAR_STATUS_PANIC = 7,
} MdnvarStatus;

/**
 * Which innovation law a GARCH fit uses. `Auto` picks by AIC.
 */
typedef enum MdnvarInnovation {
  MDNVAR_INNOVATION_NORMAL = 0,
  MDNVAR_INNOVATION_GED = 1,
  MDNVAR_INNOVATION_AUTO = 2,
} MdnvarInnovation;

/**
 * Opaque fitted GARCH(1,1).
 */
typedef struct MdnvarGarch MdnvarGarch;

/**
 * Opaque trained network.
 */
typedef struct MdnvarNetwork MdnvarNetwork;

typedef struct MdnvarGarchParams {
  double alpha0;
  double alpha1;
  double beta1;
  /**
   * GED shape; 0 for Normal innovations.
   */
  double nu;
  double loglik;
  double aic;
  double next_variance;
} MdnvarGarchParams;

typedef struct MdnvarTest {
  double lr;
  double p_value;
} MdnvarTest;

typedef struct MdnvarBacktest {
  size_t observations;
  size_t breaches;
  struct MdnvarTest pof;
  struct MdnvarTest independence;
  struct MdnvarTest conditional_coverage;
} MdnvarBacktest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mdnvar_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t mdnvar_last_error(char *buf, size_t len);

/**
 * Historical-simulation VaR over the given losses (positive = loss).
 *
 * # Safety
 * `losses` must point to `n` doubles; `var_out` must be writable.
 */
enum MdnvarStatus mdnvar_var_hs(const double *losses, size_t n, double alpha, double *var_out);

/**
 * Constant-mean Gaussian VaR over the given returns.
 *
 * # Safety
 * `returns` must point to `n` doubles; `var_out` must be writable.
 */
enum MdnvarStatus mdnvar_var_cmm(const double *returns, size_t n, double alpha, double *var_out);

/**
 * Fits a zero-mean GARCH(1,1) to `returns`.
 *
 * # Safety
 * `returns` must point to `n` doubles; `handle_out` must be writable.
 */
enum MdnvarStatus mdnvar_garch_fit(const double *returns,
                                   size_t n,
                                   enum MdnvarInnovation innovation,
                                   struct MdnvarGarch **handle_out);

/**
 * # Safety
 * `handle` must come from [`mdnvar_garch_fit`]; `params_out` must be writable.
 */
enum MdnvarStatus mdnvar_garch_params(const struct MdnvarGarch *handle,
                                      struct MdnvarGarchParams *params_out);

/**
 * One-day VaR from the fitted model's next-day variance.
 *
 * # Safety
 * `handle` must come from [`mdnvar_garch_fit`]; `var_out` must be writable.
 */
enum MdnvarStatus mdnvar_garch_var(const struct MdnvarGarch *handle, double alpha, double *var_out);

/**
 * # Safety
 * `handle` must be null or come from [`mdnvar_garch_fit`], and not be used afterwards.
 */
void mdnvar_garch_free(struct MdnvarGarch *handle);

/**
 * Loads a trained network from its JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `handle_out` must be writable.
 */
enum MdnvarStatus mdnvar_network_from_json(const char *json, struct MdnvarNetwork **handle_out);

/**
 * Loads a trained network from a model file written by `mdnvar fit`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `handle_out` must be writable.
 */
enum MdnvarStatus mdnvar_network_load(const char *path, struct MdnvarNetwork **handle_out);

/**
 * Lookback window length and number of mixture components.
 *
 * # Safety
 * `handle` must come from a network constructor; outputs may be null.
 */
enum MdnvarStatus mdnvar_network_shape(const struct MdnvarNetwork *handle,
                                       size_t *lookback_out,
                                       size_t *components_out);

/**
 * Mixture parameters for the next day given the last `lookback` returns.
 * Each output array must hold `k` entries, `k` equal to the component count.
 *
 * # Safety
 * `window` must point to `len` doubles; `pi`, `mu`, `sigma` to `k` writable doubles each.
 */
enum MdnvarStatus mdnvar_network_mixture(const struct MdnvarNetwork *handle,
                                         const double *window,
                                         size_t len,
                                         double *pi,
                                         double *mu,
                                         double *sigma,
                                         size_t k);

/**
 * Monte Carlo VaR from the network's mixture for the next day.
 *
 * # Safety
 * `window` must point to `len` doubles; `var_out` must be writable.
 */
enum MdnvarStatus mdnvar_network_var(const struct MdnvarNetwork *handle,
                                     const double *window,
                                     size_t len,
                                     double alpha,
                                     size_t n_samples,
                                     uint64_t seed,
                                     double *var_out);

/**
 * # Safety
 * `handle` must be null or come from a network constructor, and not be used afterwards.
 */
void mdnvar_network_free(struct MdnvarNetwork *handle);

/**
 * Kupiec, Christoffersen and joint coverage tests on a 0/1 breach series.
 *
 * # Safety
 * `indicators` must point to `n` bytes, each 0 or 1; `result_out` must be writable.
 */
enum MdnvarStatus mdnvar_backtest(const uint8_t *indicators,
                                  size_t n,
                                  double alpha,
                                  struct MdnvarBacktest *result_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDNVAR_H */
