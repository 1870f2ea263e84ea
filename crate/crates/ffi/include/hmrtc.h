#ifndef HMRTC_H
#define HMRTC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HmrtcStatus {
  HMRTC_STATUS_OK = 0,
  HMRTC_STATUS_NULL_POINTER = 1,
  HMRTC_STATUS_DIM_MISMATCH = 2,
  HMRTC_STATUS_SHAPE = 3,
  HMRTC_STATUS_OUT_OF_RANGE = 4,
  HMRTC_STATUS_EMPTY_MASK = 5,
  HMRTC_STATUS_NON_FINITE = 6,
  HMRTC_STATUS_INVALID_PARAMETER = 7,
  HMRTC_STATUS_ZERO_REFERENCE = 8,
  HMRTC_STATUS_FORMAT = 9,
  HMRTC_STATUS_IO = 10,
  HMRTC_STATUS_INVALID_UTF8 = 11,
  HMRTC_STATUS_PANIC = 12,
  HMRTC_STATUS_OTHER = 13,
} HmrtcStatus;

/**
 * Opaque sampling mask.
 */
typedef struct HmrtcMask HmrtcMask;

/**
 * Opaque solver output.
 */
typedef struct HmrtcResult HmrtcResult;

/**
 * Opaque complex tensor.
 */
typedef struct HmrtcTensor HmrtcTensor;

/**
 * HMRTC solver settings. Obtain defaults from [`hmrtc_solver_config_default`].
 */
typedef struct HmrtcSolverConfig {
  size_t r_hat;
  double lambda;
  double beta0;
  double rho;
  double tol;
  size_t max_iter;
  uint64_t seed;
  /**
   * True to solve the rows of each factor update in parallel.
   */
  bool parallel;
} HmrtcSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *hmrtc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hmrtc_version(void);

struct HmrtcSolverConfig hmrtc_solver_config_default(void);

/**
 * Creates a tensor from `2 · ∏ dims` interleaved doubles.
 *
 * # Safety
 * `dims` must point to `order` values and `data` to `data_len` doubles.
 */
enum HmrtcStatus hmrtc_tensor_new(const size_t *dims,
                                  size_t order,
                                  const double *data,
                                  size_t data_len,
                                  struct HmrtcTensor **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum HmrtcStatus hmrtc_tensor_load(const char *path, struct HmrtcTensor **out);

/**
 * # Safety
 * `tensor` must be a live handle and `path` a NUL-terminated string.
 */
enum HmrtcStatus hmrtc_tensor_save(const struct HmrtcTensor *tensor, const char *path);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `tensor` must be null or a live handle.
 */
size_t hmrtc_tensor_order(const struct HmrtcTensor *tensor);

/**
 * Number of complex entries, or 0 for a null handle.
 *
 * # Safety
 * `tensor` must be null or a live handle.
 */
size_t hmrtc_tensor_len(const struct HmrtcTensor *tensor);

/**
 * Copies the dims into `out[0..order]`.
 *
 * # Safety
 * `out` must have room for `capacity` values.
 */
enum HmrtcStatus hmrtc_tensor_dims(const struct HmrtcTensor *tensor, size_t *out, size_t capacity);

/**
 * Copies the entries as interleaved doubles into `out[0..2·len]`.
 *
 * # Safety
 * `out` must have room for `capacity` doubles.
 */
enum HmrtcStatus hmrtc_tensor_copy_data(const struct HmrtcTensor *tensor,
                                        double *out,
                                        size_t capacity);

/**
 * # Safety
 * `tensor` must be null or a handle not freed before.
 */
void hmrtc_tensor_free(struct HmrtcTensor *tensor);

/**
 * Creates a mask from canonical linear indices; duplicates are merged.
 *
 * # Safety
 * `dims` must point to `order` values and `indices` to `count` values.
 */
enum HmrtcStatus hmrtc_mask_new(const size_t *dims,
                                size_t order,
                                const size_t *indices,
                                size_t count,
                                struct HmrtcMask **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum HmrtcStatus hmrtc_mask_load(const char *path, struct HmrtcMask **out);

/**
 * # Safety
 * `mask` must be a live handle and `path` a NUL-terminated string.
 */
enum HmrtcStatus hmrtc_mask_save(const struct HmrtcMask *mask, const char *path);

/**
 * Number of observed entries, or 0 for a null handle.
 *
 * # Safety
 * `mask` must be null or a live handle.
 */
size_t hmrtc_mask_len(const struct HmrtcMask *mask);

/**
 * # Safety
 * `mask` must be null or a handle not freed before.
 */
void hmrtc_mask_free(struct HmrtcMask *mask);

/**
 * Runs HMRTC on the entries of `observed` selected by `mask`.
 *
 * # Safety
 * All pointers must be live handles or valid pointers.
 */
enum HmrtcStatus hmrtc_solve(const struct HmrtcTensor *observed,
                             const struct HmrtcMask *mask,
                             const struct HmrtcSolverConfig *config,
                             struct HmrtcResult **out);

/**
 * Runs the weighted CP baseline (alternating least squares).
 *
 * # Safety
 * All pointers must be live handles or valid pointers.
 */
enum HmrtcStatus hmrtc_wcp_solve(const struct HmrtcTensor *observed,
                                 const struct HmrtcMask *mask,
                                 size_t r_hat,
                                 size_t max_iter,
                                 uint64_t seed,
                                 struct HmrtcResult **out);

/**
 * New tensor handle holding a copy of the reconstruction.
 *
 * # Safety
 * `result` must be a live handle.
 */
enum HmrtcStatus hmrtc_result_reconstruction(const struct HmrtcResult *result,
                                             struct HmrtcTensor **out);

/**
 * Iterations run, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t hmrtc_result_iterations(const struct HmrtcResult *result);

/**
 * Whether the stopping tolerance was reached before the iteration cap.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
bool hmrtc_result_converged(const struct HmrtcResult *result);

/**
 * # Safety
 * `result` must be null or a handle not freed before.
 */
void hmrtc_result_free(struct HmrtcResult *result);

/**
 * `‖x − y‖_F / ‖y‖_F` written to `out`.
 *
 * # Safety
 * `x` and `y` must be live handles and `out` a valid pointer.
 */
enum HmrtcStatus hmrtc_rlne(const struct HmrtcTensor *x, const struct HmrtcTensor *y, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HMRTC_H */
