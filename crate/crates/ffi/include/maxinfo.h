/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MAXINFO_H
#define MAXINFO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MxStatus {
  MX_STATUS_OK = 0,
  MX_STATUS_NULL_POINTER = 1,
  // Empty, non-finite or otherwise unusable input data.
  MX_STATUS_INVALID_INPUT = 2,
  // Configuration, count or chunking out of range.
  MX_STATUS_INVALID_CONFIG = 3,
  // Malformed file contents.
  MX_STATUS_FORMAT = 4,
  MX_STATUS_IO = 5,
  MX_STATUS_NUMERICAL = 6,
  // Output buffer smaller than the result.
  MX_STATUS_BUFFER_TOO_SMALL = 7,
  // A Rust panic was caught at the boundary.
  MX_STATUS_PANIC = 8,
} MxStatus;

typedef enum MxMode {
  MX_MODE_FAST = 0,
  MX_MODE_SLOW = 1,
  MX_MODE_CHUNKED = 2,
} MxMode;

typedef enum MxTolConvention {
  // Stop threshold `sqrt(1 + tol^2)`.
  MX_TOL_CONVENTION_SQRT1P = 0,
  // Stop threshold `tol`.
  MX_TOL_CONVENTION_LITERAL = 1,
} MxTolConvention;

// Selection parameters.
typedef struct MxConfig MxConfig;

// Embedding matrix, one row per frame.
typedef struct MxMatrix MxMatrix;

// Result of [`mx_select`].
typedef struct MxReport MxReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the next
// failing call on the same thread.
const char *mx_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mx_version(void);

// Copies a row-major `rows x cols` f32 buffer into a new matrix.
//
// # Safety
// `data` must point to `rows * cols` floats; `out` must be writable.
enum MxStatus mx_matrix_from_f32(const float *data,
                                 size_t rows,
                                 size_t cols,
                                 struct MxMatrix **out);

// Copies a row-major `rows x cols` f64 buffer into a new matrix.
//
// # Safety
// `data` must point to `rows * cols` doubles; `out` must be writable.
enum MxStatus mx_matrix_from_f64(const double *data,
                                 size_t rows,
                                 size_t cols,
                                 struct MxMatrix **out);

// Reads an MXIF embedding file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MxStatus mx_matrix_read(const char *path, struct MxMatrix **out);

// Reads a headerless numeric CSV file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MxStatus mx_matrix_read_csv(const char *path, struct MxMatrix **out);

// # Safety
// `m` must be NULL or a live matrix handle.
size_t mx_matrix_rows(const struct MxMatrix *m);

// # Safety
// `m` must be NULL or a live matrix handle.
size_t mx_matrix_cols(const struct MxMatrix *m);

// # Safety
// `m` must be NULL or a handle not yet freed.
void mx_matrix_free(struct MxMatrix *m);

// New configuration with the library defaults.
struct MxConfig *mx_config_new(void);

// # Safety
// `c` must be NULL or a handle not yet freed.
void mx_config_free(struct MxConfig *c);

// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_set_rank(struct MxConfig *c, size_t rank);

// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_set_tol(struct MxConfig *c, double tol);

// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_set_bounds(struct MxConfig *c, size_t min_out, size_t max_out);

// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_set_mode(struct MxConfig *c, enum MxMode mode);

// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_set_pool(struct MxConfig *c, size_t pool);

// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_set_chunks(struct MxConfig *c, size_t chunks);

// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_set_tol_convention(struct MxConfig *c, enum MxTolConvention conv);

// Checks the configuration without running a selection.
//
// # Safety
// `c` must be a live config handle.
enum MxStatus mx_config_validate(const struct MxConfig *c);

// Runs keyframe selection.
//
// # Safety
// `m` and `c` must be live handles; `out` must be writable.
enum MxStatus mx_select(const struct MxMatrix *m, const struct MxConfig *c, struct MxReport **out);

// Number of selected frames.
//
// # Safety
// `r` must be NULL or a live report handle.
size_t mx_report_len(const struct MxReport *r);

// Copies the ascending selected frame indices into `buf`.
//
// `*written` (if not NULL) receives the number of indices even when `cap`
// is too small, in which case `MX_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `r` must be a live report; `buf` must have room for `cap` values.
enum MxStatus mx_report_indices(const struct MxReport *r, size_t *buf, size_t cap, size_t *written);

// Serialises the report as JSON. With `canonical` the timing fields are
// zeroed. Release the string with [`mx_string_free`].
//
// # Safety
// `r` must be a live report; `out` must be writable.
enum MxStatus mx_report_to_json(const struct MxReport *r, bool canonical, char **out);

// # Safety
// `r` must be NULL or a handle not yet freed.
void mx_report_free(struct MxReport *r);

// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void mx_string_free(char *s);

// `k` evenly spaced indices out of `0..n` into `buf`.
//
// # Safety
// `buf` must have room for `cap` values.
enum MxStatus mx_uniform_sample(size_t n, size_t k, size_t *buf, size_t cap);

// Volume of a row-major `rows x cols` matrix.
//
// # Safety
// `data` must point to `rows * cols` doubles; `out` must be writable.
enum MxStatus mx_rect_vol(const double *data, size_t rows, size_t cols, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAXINFO_H */
