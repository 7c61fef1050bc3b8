#ifndef MATCHA_H
#define MATCHA_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MatchaStatus {
  MATCHA_STATUS_OK = 0,
  MATCHA_STATUS_NULL_POINTER = 1,
  MATCHA_STATUS_INVALID_ARGUMENT = 2,
  MATCHA_STATUS_DIMENSION = 3,
  MATCHA_STATUS_SHAPE = 4,
  MATCHA_STATUS_INDEX = 5,
  MATCHA_STATUS_PARSE = 6,
  MATCHA_STATUS_COMPILE = 7,
  MATCHA_STATUS_BACKEND = 8,
  MATCHA_STATUS_PANIC = 9,
} MatchaStatus;

// Backend selector for [`matcha_set_backend`].
typedef enum MatchaBackend {
  MATCHA_BACKEND_SEQ = 0,
  MATCHA_BACKEND_PARALLEL = 1,
  MATCHA_BACKEND_AUTO = 2,
} MatchaBackend;

// Reduction selector for [`matcha_matrix_reduce`].
typedef enum MatchaReduce {
  MATCHA_REDUCE_MIN = 0,
  MATCHA_REDUCE_MAX = 1,
  MATCHA_REDUCE_SUM = 2,
  MATCHA_REDUCE_MEAN = 3,
} MatchaReduce;

// Opaque compute context.
typedef struct MatchaContext MatchaContext;

// Opaque compiled elementwise map.
typedef struct MatchaMap MatchaMap;

// Opaque dense f32 matrix.
typedef struct MatchaMatrix MatchaMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next library call on the same thread.
const char *matcha_last_error(void);

// Static description of a status code.
const char *matcha_status_str(enum MatchaStatus status);

// Selects the process-wide backend. `threshold` is the minimum output size
// dispatched to the parallel device under `Auto`.
enum MatchaStatus matcha_set_backend(enum MatchaBackend choice, size_t threshold);

// Creates a `rows`×`cols` matrix from `rows*cols` values laid out row-major
// (or column-major when `row_major` is false). `data` may be NULL for zeros.
//
// # Safety
// `data` must be NULL or point to `rows*cols` readable floats; `out` must be writable.
enum MatchaStatus matcha_matrix_new(size_t rows,
                                    size_t cols,
                                    const float *data,
                                    bool row_major,
                                    struct MatchaMatrix **out);

// Uniform random matrix in [0, 1) from `seed`.
//
// # Safety
// `out` must be writable.
enum MatchaStatus matcha_matrix_random(size_t rows,
                                       size_t cols,
                                       uint64_t seed,
                                       struct MatchaMatrix **out);

// Releases a matrix. NULL is ignored.
//
// # Safety
// `m` must be NULL or a handle from this library not yet freed.
void matcha_matrix_free(struct MatchaMatrix *m);

// # Safety
// `m` must be a live handle; `rows` and `cols` must be writable.
enum MatchaStatus matcha_matrix_shape(const struct MatchaMatrix *m, size_t *rows, size_t *cols);

// # Safety
// `m` must be a live handle; `value` must be writable.
enum MatchaStatus matcha_matrix_get(const struct MatchaMatrix *m, size_t i, size_t j, float *value);

// # Safety
// `m` must be a live handle.
enum MatchaStatus matcha_matrix_set(struct MatchaMatrix *m, size_t i, size_t j, float value);

// Copies all values, row-major, into `buffer` of `len` floats.
//
// # Safety
// `m` must be a live handle; `buffer` must have room for `len` floats.
enum MatchaStatus matcha_matrix_copy_to(const struct MatchaMatrix *m, float *buffer, size_t len);

// `out = a + b`; an n×1 `b` broadcasts across columns.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum MatchaStatus matcha_matrix_add(const struct MatchaMatrix *a,
                                    const struct MatchaMatrix *b,
                                    struct MatchaMatrix **out);

// `out = a - b`.
//
// # Safety
// See [`matcha_matrix_add`].
enum MatchaStatus matcha_matrix_sub(const struct MatchaMatrix *a,
                                    const struct MatchaMatrix *b,
                                    struct MatchaMatrix **out);

// Elementwise product.
//
// # Safety
// See [`matcha_matrix_add`].
enum MatchaStatus matcha_matrix_mul(const struct MatchaMatrix *a,
                                    const struct MatchaMatrix *b,
                                    struct MatchaMatrix **out);

// Elementwise quotient.
//
// # Safety
// See [`matcha_matrix_add`].
enum MatchaStatus matcha_matrix_div(const struct MatchaMatrix *a,
                                    const struct MatchaMatrix *b,
                                    struct MatchaMatrix **out);

// Matrix product.
//
// # Safety
// See [`matcha_matrix_add`].
enum MatchaStatus matcha_matrix_matmul(const struct MatchaMatrix *a,
                                       const struct MatchaMatrix *b,
                                       struct MatchaMatrix **out);

// `out = alpha * a`.
//
// # Safety
// `a` must be a live handle; `out` must be writable.
enum MatchaStatus matcha_matrix_scale(const struct MatchaMatrix *a,
                                      float alpha,
                                      struct MatchaMatrix **out);

// O(1) transposed view sharing storage with `a`.
//
// # Safety
// `a` must be a live handle; `out` must be writable.
enum MatchaStatus matcha_matrix_transpose(const struct MatchaMatrix *a, struct MatchaMatrix **out);

// # Safety
// `a` must be a live handle; `value` must be writable.
enum MatchaStatus matcha_matrix_reduce(const struct MatchaMatrix *a,
                                       enum MatchaReduce op,
                                       float *value);

// JSON text of `a`, released with [`matcha_string_free`].
//
// # Safety
// `a` must be a live handle; `out` must be writable.
enum MatchaStatus matcha_matrix_to_json(const struct MatchaMatrix *a, char **out);

// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum MatchaStatus matcha_matrix_from_json(const char *json, struct MatchaMatrix **out);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must be NULL or a string from this library not yet freed.
void matcha_string_free(char *s);

// Context on the first available compute device.
//
// # Safety
// `out` must be writable.
enum MatchaStatus matcha_context_new(struct MatchaContext **out);

// Releases a context. Matrices computed on it stay valid.
//
// # Safety
// `ctx` must be NULL or a live handle.
void matcha_context_free(struct MatchaContext *ctx);

// Compiles an elementwise map over `arity` inputs named `a`..`d`, e.g.
// `"a[i] * b[i] + 1.0"`. With a NULL `ctx` it follows the current backend.
//
// # Safety
// `ctx` must be NULL or live; `expression` must be NUL-terminated; `out` writable.
enum MatchaStatus matcha_map_new(const struct MatchaContext *ctx,
                                 const char *expression,
                                 size_t arity,
                                 struct MatchaMap **out);

// Applies a map to `count` same-shape inputs.
//
// # Safety
// `map` must be live; `inputs` must hold `count` live matrix handles; `out` writable.
enum MatchaStatus matcha_map_apply(const struct MatchaMap *map,
                                   const struct MatchaMatrix *const *inputs,
                                   size_t count,
                                   struct MatchaMatrix **out);

// # Safety
// `map` must be NULL or a live handle.
void matcha_map_free(struct MatchaMap *map);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATCHA_H */
