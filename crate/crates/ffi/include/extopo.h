#ifndef EXTOPO_H
#define EXTOPO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ExtopoStatus {
  EXTOPO_STATUS_OK = 0,
  EXTOPO_STATUS_NULL_POINTER = 1,
  EXTOPO_STATUS_INVALID_ARGUMENT = 2,
  EXTOPO_STATUS_IO = 3,
  EXTOPO_STATUS_FORMAT = 4,
  EXTOPO_STATUS_DOMAIN = 5,
  EXTOPO_STATUS_DEGENERATE = 6,
  EXTOPO_STATUS_DIVERGENT = 7,
  EXTOPO_STATUS_SIZE_GUARD = 8,
  EXTOPO_STATUS_BUFFER_TOO_SMALL = 9,
  EXTOPO_STATUS_PANIC = 10,
} ExtopoStatus;

// A real-valued field on a periodic 2D or 3D grid.
typedef struct ExtopoField ExtopoField;

// A binary excursion mask.
typedef struct ExtopoMask ExtopoMask;

typedef struct ExtopoMoments {
  double mean;
  double sigma0;
  double sigma1;
} ExtopoMoments;

typedef struct ExtopoTopoStats {
  uint64_t b0;
  uint64_t b1;
  uint64_t b2;
  int64_t chi;
  uint64_t bsum;
} ExtopoTopoStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`) and returns the full message length
// excluding the terminator; 0 when no error has been recorded.
//
// `buf` must be NULL or valid for `len` bytes.
size_t extopo_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *extopo_version(void);

// Draws a Gaussian random field with `P(k) = amplitude k^alpha`, optional
// cutoffs (`NaN` for none), smoothed on scale `rs`. `seed` and `stream`
// select the generator stream; equal arguments give equal fields.
//
// `out` must be valid for one pointer write.
enum ExtopoStatus extopo_field_generate(double amplitude,
                                        double alpha,
                                        double k_low,
                                        double k_high,
                                        size_t side,
                                        double box_size,
                                        uint32_t dimension,
                                        double rs,
                                        uint64_t seed,
                                        uint64_t stream,
                                        struct ExtopoField **out);

// Wraps `len = side^dimension` row-major samples copied from `values`.
//
// `values` must be valid for `len` reads and `out` for one pointer write.
enum ExtopoStatus extopo_field_from_values(uint32_t dimension,
                                           size_t side,
                                           double box_size,
                                           const double *values,
                                           size_t len,
                                           struct ExtopoField **out);

// `file` must be a NUL-terminated string and `out` valid for one write.
enum ExtopoStatus extopo_field_read(const char *file, struct ExtopoField **out);

// Writes the binary dump and its JSON sidecar.
//
// `field` must come from this library; `file` must be NUL terminated.
enum ExtopoStatus extopo_field_write(const struct ExtopoField *field, const char *file);

// `field` must be NULL or a handle not yet freed.
void extopo_field_free(struct ExtopoField *field);

// Number of samples, 0 for NULL.
//
// `field` must be NULL or a live handle.
size_t extopo_field_len(const struct ExtopoField *field);

// Copies the samples into `buf`, which must hold `extopo_field_len` values.
//
// `field` must be a live handle and `buf` valid for `len` writes.
enum ExtopoStatus extopo_field_values(const struct ExtopoField *field, double *buf, size_t len);

// Sample mean, standard deviation and RMS gradient.
//
// `field` must be a live handle and `out` valid for one write.
enum ExtopoStatus extopo_field_moments(const struct ExtopoField *field, struct ExtopoMoments *out);

// Excursion set `{f >= nu sigma0}`. `sigma0 > 0` fixes the normalisation;
// any other value uses the field's sample standard deviation.
//
// `field` must be a live handle and `out` valid for one write.
enum ExtopoStatus extopo_mask_threshold(const struct ExtopoField *field,
                                        double nu,
                                        double sigma0,
                                        struct ExtopoMask **out);

// Mask from `len = side^dimension` bytes, non-zero meaning foreground.
//
// `bits` must be valid for `len` reads and `out` for one write.
enum ExtopoStatus extopo_mask_from_bits(uint32_t dimension,
                                        size_t side,
                                        const uint8_t *bits,
                                        size_t len,
                                        struct ExtopoMask **out);

// `mask` must be NULL or a handle not yet freed.
void extopo_mask_free(struct ExtopoMask *mask);

// Betti numbers, Euler characteristic and their sum (2D or 3D).
//
// `mask` must be a live handle and `out` valid for one write.
enum ExtopoStatus extopo_mask_stats(const struct ExtopoMask *mask, struct ExtopoTopoStats *out);

// Hole spectrum of a 2D mask: writes `m_0 .. m_jmax` into `counts` and
// `jmax + 1` into `needed`. With fewer than `jmax + 1` slots nothing is
// copied and `EXTOPO_STATUS_BUFFER_TOO_SMALL` is returned. An empty mask
// has `needed = 0`.
//
// `mask` must be a live handle, `counts` valid for `len` writes (or NULL
// when `len` is 0) and `needed` valid for one write.
enum ExtopoStatus extopo_mask_hole_spectrum(const struct ExtopoMask *mask,
                                            uint64_t *counts,
                                            size_t len,
                                            size_t *needed);

// Expected Euler characteristic per unit area of a 2D Gaussian field at
// threshold `nu` with correlation length `r_c`.
//
// `out` must be valid for one write.
enum ExtopoStatus extopo_analytic_chi(double nu, double r_c, double *out);

// Closed-form state count for `b0 = n0`, `b1 = n1` as a decimal string.
// `needed` receives the string length including the terminator; when
// `len` is smaller nothing is copied.
//
// `buf` must be valid for `len` bytes (or NULL when `len` is 0) and
// `needed` valid for one write.
enum ExtopoStatus extopo_states_formula(uint64_t n0,
                                        uint64_t n1,
                                        char *buf,
                                        size_t len,
                                        size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXTOPO_H */
