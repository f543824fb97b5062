#ifndef KRONSKETCH_H
#define KRONSKETCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_NULL_POINTER = 1,
  KS_STATUS_INVALID_ARGUMENT = 2,
  KS_STATUS_DIMENSION_MISMATCH = 3,
  KS_STATUS_NUMERICAL = 4,
  KS_STATUS_PARSE = 5,
  KS_STATUS_IO = 6,
  KS_STATUS_BUFFER_TOO_SMALL = 7,
  KS_STATUS_PANIC = 8,
} KsStatus;

typedef enum KsBaseFamily {
  KS_BASE_FAMILY_COUNT_SKETCH = 0,
  KS_BASE_FAMILY_OSNAP = 1,
  KS_BASE_FAMILY_SRHT = 2,
} KsBaseFamily;

typedef enum KsTensorFamily {
  KS_TENSOR_FAMILY_TENSOR_SKETCH = 0,
  KS_TENSOR_FAMILY_TENSOR_SRHT = 1,
} KsTensorFamily;

/**
 * Opaque tensor tree handle.
 */
typedef struct KsTree KsTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Empty when none has
 * occurred. The pointer stays valid until the next failing call on the
 * same thread.
 */
const char *ks_last_error_message(void);

/**
 * Builds a tree over `q` factors. Factor `i` is `rows[i] × cols[i]`, stored
 * row-major at `data[i]`. The handle is written to `out` and must be
 * released with [`ks_tree_free`].
 *
 * # Safety
 * `data`, `rows` and `cols` must point to `q` valid entries and each
 * `data[i]` to `rows[i] * cols[i]` doubles.
 */
enum KsStatus ks_tree_new(size_t q,
                          const double *const *data,
                          const size_t *rows,
                          const size_t *cols,
                          enum KsBaseFamily c_family,
                          enum KsTensorFamily t_family,
                          size_t m,
                          uint64_t seed,
                          bool adaptive,
                          struct KsTree **out);

/**
 * # Safety
 * `tree` must be null or a handle from this library not yet freed.
 */
void ks_tree_free(struct KsTree *tree);

/**
 * Adds the `rows × cols` matrix `delta` to factor `i` (zero-based).
 *
 * # Safety
 * `tree` must be a live handle and `delta` must hold `rows * cols` doubles.
 */
enum KsStatus ks_tree_update(struct KsTree *tree,
                             size_t i,
                             const double *delta,
                             size_t rows,
                             size_t cols);

/**
 * Like [`ks_tree_update`] but redraws the sketches on the update path. The
 * tree must have been built with `adaptive` set.
 *
 * # Safety
 * Same as [`ks_tree_update`].
 */
enum KsStatus ks_tree_update_adaptive(struct KsTree *tree,
                                      size_t i,
                                      const double *delta,
                                      size_t rows,
                                      size_t cols);

/**
 * Nodes recomputed by the most recent update.
 *
 * # Safety
 * `tree` must be a live handle; `out` must be writable.
 */
enum KsStatus ks_tree_last_recompute_count(const struct KsTree *tree, size_t *out);

/**
 * Shape of the root sketch `S(A_1 ⊗ … ⊗ A_q)`.
 *
 * # Safety
 * `tree` must be a live handle; `rows` and `cols` must be writable.
 */
enum KsStatus ks_tree_root_shape(const struct KsTree *tree, size_t *rows, size_t *cols);

/**
 * Copies the root sketch row-major into `out`, which holds `len` doubles.
 *
 * # Safety
 * `tree` must be a live handle; `out` must hold `len` doubles.
 */
enum KsStatus ks_tree_root_copy(const struct KsTree *tree, double *out, size_t len);

/**
 * Sketches the sparse vector given by `nnz` (index, value) pairs of
 * logical length `n`. Writes `m` values to `out`.
 *
 * # Safety
 * `indices` and `values` must hold `nnz` entries; `out` must hold `len`
 * doubles.
 */
enum KsStatus ks_tree_sketch_vector(const struct KsTree *tree,
                                    size_t n,
                                    const size_t *indices,
                                    const double *values,
                                    size_t nnz,
                                    double *out,
                                    size_t len);

/**
 * Solves the sketched regression `min ‖S A x − S b‖` for the current tree.
 * `b_sketch` is an already-sketched label of length `m`; `x` receives `d`
 * values.
 *
 * # Safety
 * `b_sketch` must hold `m` doubles and `x` must hold `len` doubles.
 */
enum KsStatus ks_regression_query(const struct KsTree *tree,
                                  const double *b_sketch,
                                  size_t m,
                                  double *x,
                                  size_t len);

/**
 * Rank-`k` projector rows `U_k` (`k × d`, row-major) from the sketched
 * root.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum KsStatus ks_lowrank_query(const struct KsTree *tree, size_t k, double *out, size_t len);

/**
 * Sketch dimension from the bound for `(c_family, t_family)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum KsStatus ks_choose_m(enum KsBaseFamily c_family,
                          enum KsTensorFamily t_family,
                          double dim,
                          size_t q,
                          double eps,
                          double delta,
                          double c_factor,
                          size_t *out);

/**
 * # Safety
 * `tree` must be a live handle and `path` a NUL-terminated UTF-8 string.
 */
enum KsStatus ks_tree_write_snapshot(const struct KsTree *tree, const char *path);

/**
 * Restores a tree written by [`ks_tree_write_snapshot`].
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum KsStatus ks_tree_read_snapshot(const char *path, struct KsTree **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KRONSKETCH_H */
