#ifndef ISOPAR_H
#define ISOPAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `0` is success.
 */
typedef enum IsoparStatus {
  ISOPAR_STATUS_OK = 0,
  ISOPAR_STATUS_INVALID_ARGUMENT = 1,
  ISOPAR_STATUS_UNSUPPORTED = 2,
  ISOPAR_STATUS_INFEASIBLE = 3,
  ISOPAR_STATUS_NON_CONVERGENCE = 4,
  ISOPAR_STATUS_INTERNAL = 5,
  ISOPAR_STATUS_IO = 6,
  ISOPAR_STATUS_SERIALIZATION = 7,
  ISOPAR_STATUS_NULL_POINTER = 8,
  ISOPAR_STATUS_BUFFER_TOO_SMALL = 9,
  ISOPAR_STATUS_PANIC = 10,
} IsoparStatus;

/**
 * Clifford family selector.
 */
typedef enum IsoparFamily {
  ISOPAR_FAMILY_STANDARD = 0,
  ISOPAR_FAMILY_DEFINITE = 1,
  ISOPAR_FAMILY_INDEFINITE = 2,
} IsoparFamily;

/**
 * Opaque Clifford system.
 */
typedef struct IsoparClifford IsoparClifford;

/**
 * Opaque classification result for one case.
 */
typedef struct IsoparReport IsoparReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes (without the terminating NUL) of the last error message, 0 if none.
 */
size_t isopar_last_error_length(void);

/**
 * Copy the last error message into `buf` (NUL-terminated).
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum IsoparStatus isopar_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *isopar_version(void);

/**
 * Build the Clifford system `P_0, ..., P_m` on `R^{2l}`, `l = k delta(m)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum IsoparStatus isopar_clifford_new(size_t m,
                                      size_t k,
                                      enum IsoparFamily family,
                                      struct IsoparClifford **out);

/**
 * Release a Clifford handle. Null is ignored.
 *
 * # Safety
 * `h` must come from [`isopar_clifford_new`] and not be used afterwards.
 */
void isopar_clifford_free(struct IsoparClifford *h);

/**
 * Ambient dimension `2l` (0 for a null handle).
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t isopar_clifford_ambient_dim(const struct IsoparClifford *h);

/**
 * Copy `P_a` column-major into `buf` of length `(2l)^2`.
 *
 * # Safety
 * `h` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum IsoparStatus isopar_clifford_generator(const struct IsoparClifford *h,
                                            size_t a,
                                            double *buf,
                                            size_t len);

/**
 * Check the Clifford relations; writes the largest residual and the pass flag.
 *
 * # Safety
 * `h` must be a live handle; the out pointers must be valid.
 */
enum IsoparStatus isopar_clifford_verify(const struct IsoparClifford *h,
                                         double tol,
                                         double *max_residual,
                                         bool *passed);

/**
 * Classify one case (`otfkm:M1:4:2[:family]` or `homog:<id>`) with the default sampling
 * budget, `points` random points and the given seed.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum IsoparStatus isopar_classify_case(const char *spec,
                                       uint64_t seed,
                                       size_t points,
                                       struct IsoparReport **out);

/**
 * Release a report. Null is ignored.
 *
 * # Safety
 * `r` must come from [`isopar_classify_case`] and not be used afterwards.
 */
void isopar_report_free(struct IsoparReport *r);

/**
 * Whether the verdicts agree with the predicted matrix.
 *
 * # Safety
 * `r` must be null or a live report.
 */
bool isopar_report_matches_expected(const struct IsoparReport *r);

/**
 * Verdicts as `-1` (indeterminate), `0` (no), `1` (yes), in the order
 * A, B, Ricci parallel, Einstein.
 *
 * # Safety
 * `r` must be a live report and `out` must point to 4 writable ints.
 */
enum IsoparStatus isopar_report_verdicts(const struct IsoparReport *r, int32_t *out);

/**
 * The report as JSON; free with [`isopar_string_free`]. Null on failure.
 *
 * # Safety
 * `r` must be a live report.
 */
char *isopar_report_json(const struct IsoparReport *r);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void isopar_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOPAR_H */
