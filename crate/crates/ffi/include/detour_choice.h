#ifndef DETOUR_CHOICE_H
#define DETOUR_CHOICE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum DcStatus {
  DC_STATUS_OK = 0,
  DC_STATUS_NULL_POINTER = 1,
  DC_STATUS_INVALID_ARGUMENT = 2,
  DC_STATUS_IO = 3,
  /**
   * Malformed input file: missing column, bad row, failed validation.
   */
  DC_STATUS_DATA = 4,
  DC_STATUS_SPECIFICATION = 5,
  /**
   * Estimation or numerical failure.
   */
  DC_STATUS_ESTIMATION = 6,
  /**
   * The output buffer is too small; the required size was still reported.
   */
  DC_STATUS_BUFFER_TOO_SMALL = 7,
  DC_STATUS_INDEX_OUT_OF_RANGE = 8,
  DC_STATUS_PANIC = 9,
} DcStatus;

/**
 * Loaded survey responses.
 */
typedef struct DcDataset DcDataset;

/**
 * Final estimates of one fit: the mixture when one was requested,
 * otherwise the logit.
 */
typedef struct DcResult DcResult;

/**
 * Fit summary of an estimation result.
 */
typedef struct DcFitSummary {
  double ll_null;
  double ll_final;
  double adjusted_rho_sq;
  size_t n_parameters;
  size_t sample_size;
  /**
   * Draws per observation for a mixture, 0 for a logit.
   */
  size_t draws;
  size_t iterations;
  size_t hessian_rank;
  bool converged;
} DcFitSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to fit) and returns the full message length
 * without the NUL. Returns 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t dc_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dc_version(void);

/**
 * Loads a survey CSV. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DcStatus dc_dataset_load(const char *path, struct DcDataset **out);

/**
 * Number of observations; 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle from [`dc_dataset_load`].
 */
size_t dc_dataset_len(const struct DcDataset *d);

/**
 * Releases a dataset handle. Null is a no-op.
 *
 * # Safety
 * `d` must be null or a live handle that is not used afterwards.
 */
void dc_dataset_free(struct DcDataset *d);

/**
 * Estimates `model` (preset name or spec file path) with default settings.
 * With `mixture` set the time coefficients are also fitted as normal
 * mixtures using `draws` Halton draws per observation (0 keeps the default)
 * seeded by `seed`, and the handle holds the mixture estimates.
 *
 * # Safety
 * `d` must be a live dataset handle, `model` a NUL-terminated string and
 * `out` writable.
 */
enum DcStatus dc_fit(const struct DcDataset *d,
                     const char *model,
                     bool mixture,
                     size_t draws,
                     uint64_t seed,
                     struct DcResult **out);

/**
 * Releases a result handle. Null is a no-op.
 *
 * # Safety
 * `r` must be null or a live handle that is not used afterwards.
 */
void dc_result_free(struct DcResult *r);

/**
 * Number of estimated coefficients; 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live result handle.
 */
size_t dc_result_parameter_count(const struct DcResult *r);

/**
 * Copies the name of coefficient `i` into `buf`. `required` (may be null)
 * receives the buffer size needed including the NUL.
 *
 * # Safety
 * `r` must be a live result handle; `buf` null or `len` writable bytes.
 */
enum DcStatus dc_result_parameter_name(const struct DcResult *r,
                                       size_t i,
                                       char *buf,
                                       size_t len,
                                       size_t *required);

/**
 * Estimate, robust standard error and robust t-statistic of coefficient `i`.
 * Any of the output pointers may be null.
 *
 * # Safety
 * `r` must be a live result handle; non-null outputs must be writable.
 */
enum DcStatus dc_result_parameter(const struct DcResult *r,
                                  size_t i,
                                  double *value,
                                  double *robust_se,
                                  double *robust_t);

/**
 * Fills `out` with the fit summary.
 *
 * # Safety
 * `r` must be a live result handle and `out` writable.
 */
enum DcStatus dc_result_summary(const struct DcResult *r, struct DcFitSummary *out);

/**
 * Adjusted rho-square `1 − (ll_final − k) / ll_null`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DcStatus dc_fit_statistics(double ll_null, double ll_final, size_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DETOUR_CHOICE_H */
