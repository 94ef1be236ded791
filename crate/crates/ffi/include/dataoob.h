#ifndef DATAOOB_H
#define DATAOOB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DataoobStatus {
  DATAOOB_STATUS_OK = 0,
  DATAOOB_STATUS_NULL_POINTER = 1,
  DATAOOB_STATUS_INVALID_ARGUMENT = 2,
  DATAOOB_STATUS_INSUFFICIENT_ROWS = 3,
  DATAOOB_STATUS_SINGLE_CLASS = 4,
  DATAOOB_STATUS_NON_FINITE = 5,
  DATAOOB_STATUS_UNDEFINED_VALUE = 6,
  DATAOOB_STATUS_BUFFER_TOO_SMALL = 7,
  DATAOOB_STATUS_PANIC = 8,
  DATAOOB_STATUS_OTHER = 9,
} DataoobStatus;

/**
 * Training or validation data.
 */
typedef struct DataoobDataset DataoobDataset;

/**
 * Per-point values from one valuation run.
 */
typedef struct DataoobValues DataoobValues;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 if there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dataoob_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dataoob_version(void);

/**
 * Builds a dataset from a row-major `n_rows x n_features` matrix and
 * labels in `0..class_count`.
 *
 * # Safety
 * `features` must point to `n_rows * n_features` doubles, `labels` to
 * `n_rows` values, and `out` to writable storage for one pointer.
 */
enum DataoobStatus dataoob_dataset_new(const double *features,
                                       const uint32_t *labels,
                                       size_t n_rows,
                                       size_t n_features,
                                       size_t class_count,
                                       struct DataoobDataset **out);

/**
 * # Safety
 * `ds` must be null or a pointer returned by [`dataoob_dataset_new`] that
 * has not been freed.
 */
void dataoob_dataset_free(struct DataoobDataset *ds);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t dataoob_dataset_rows(const struct DataoobDataset *ds);

/**
 * Fits `b` bootstrap trees on `train` and computes out-of-bag values with
 * the correctness score. Influence values and the out-of-bag estimate are
 * also computed when every point is out-of-bag at least once.
 *
 * # Safety
 * `train` must be a live dataset handle and `out` writable.
 */
enum DataoobStatus dataoob_data_oob(const struct DataoobDataset *train,
                                    size_t b,
                                    uint64_t seed,
                                    struct DataoobValues **out);

/**
 * Exact KNN Shapley values of `train` against `val` with `k` neighbors.
 *
 * # Safety
 * `train` and `val` must be live dataset handles and `out` writable.
 */
enum DataoobStatus dataoob_knn_shapley(const struct DataoobDataset *train,
                                       const struct DataoobDataset *val,
                                       size_t k,
                                       struct DataoobValues **out);

/**
 * # Safety
 * `v` must be null or a live values handle.
 */
void dataoob_values_free(struct DataoobValues *v);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `v` must be null or a live values handle.
 */
size_t dataoob_values_len(const struct DataoobValues *v);

/**
 * Copies the values into `psi` (`len` doubles; undefined entries are NaN).
 * `undefined` may be null; otherwise it receives `len` flags (1 = never
 * out-of-bag).
 *
 * # Safety
 * `psi` must point to `len` writable doubles and `undefined`, if not null,
 * to `len` writable bytes.
 */
enum DataoobStatus dataoob_values_copy(const struct DataoobValues *v,
                                       double *psi,
                                       uint8_t *undefined,
                                       size_t len);

/**
 * Copies the infinitesimal-jackknife influence values into `out`.
 * Fails with `UndefinedValue` when they were not computed (non-OOB
 * valuators, or some point never out-of-bag).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum DataoobStatus dataoob_values_influence(const struct DataoobValues *v, double *out, size_t len);

/**
 * Writes the out-of-bag estimate (mean of the values) to `out`.
 *
 * # Safety
 * `out` must point to one writable double.
 */
enum DataoobStatus dataoob_values_oob_estimate(const struct DataoobValues *v, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DATAOOB_H */
