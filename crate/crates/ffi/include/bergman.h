#ifndef BERGMAN_H
#define BERGMAN_H

/* Generated by cbindgen from the bergman-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BergmanStatus {
  BERGMAN_STATUS_OK = 0,
  BERGMAN_STATUS_NULL_POINTER = 1,
  BERGMAN_STATUS_INVALID_ARGUMENT = 2,
  BERGMAN_STATUS_UNKNOWN_DOMAIN = 3,
  BERGMAN_STATUS_OUTSIDE_DOMAIN = 4,
  BERGMAN_STATUS_UNSUPPORTED = 5,
  BERGMAN_STATUS_DEGENERATE_METRIC = 6,
  BERGMAN_STATUS_LEFT_DOMAIN = 7,
  BERGMAN_STATUS_NO_CONVERGENCE = 8,
  BERGMAN_STATUS_NO_EMBEDDING = 9,
  BERGMAN_STATUS_BUFFER_TOO_SMALL = 10,
  BERGMAN_STATUS_PANIC = 11,
  BERGMAN_STATUS_OTHER = 12,
} BergmanStatus;

/**
 * Opaque domain handle.
 */
typedef struct BergmanDomain BergmanDomain;

/**
 * Opaque kernel handle.
 */
typedef struct BergmanKernel BergmanKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bergman_version(void);

/**
 * Static description of a status code.
 */
const char *bergman_status_str(enum BergmanStatus status);

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns the full message
 * length without the terminator; 0 when there is none.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t bergman_last_error_message(char *buf, size_t len);

/**
 * Parses a catalogue identifier such as `disc`, `ball:2` or `egg:2:4`.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be writable.
 */
enum BergmanStatus bergman_domain_new(const char *id, struct BergmanDomain **out);

/**
 * # Safety
 * `domain` must come from [`bergman_domain_new`] or be null.
 */
void bergman_domain_free(struct BergmanDomain *domain);

/**
 * # Safety
 * `domain` must be a live handle; `out` writable.
 */
enum BergmanStatus bergman_domain_dim(const struct BergmanDomain *domain, size_t *out);

/**
 * # Safety
 * `z` must hold `2n` doubles; `out` writable.
 */
enum BergmanStatus bergman_domain_contains(const struct BergmanDomain *domain,
                                           const double *z,
                                           bool *out);

/**
 * Builds the kernel of a domain. `degree = 0` keeps the default series
 * degree; closed forms are preferred when available.
 *
 * # Safety
 * `domain` must be a live handle; `out` writable.
 */
enum BergmanStatus bergman_kernel_new(const struct BergmanDomain *domain,
                                      size_t degree,
                                      struct BergmanKernel **out);

/**
 * # Safety
 * `kernel` must come from [`bergman_kernel_new`] or be null.
 */
void bergman_kernel_free(struct BergmanKernel *kernel);

/**
 * `K(z, w)` as real and imaginary parts.
 *
 * # Safety
 * `z`, `w` must hold `2n` doubles; `re`, `im` writable.
 */
enum BergmanStatus bergman_kernel_eval(const struct BergmanKernel *kernel,
                                       const double *z,
                                       const double *w,
                                       double *re,
                                       double *im);

/**
 * Metric tensor `g_{ab}` at `z`, row-major with interleaved real and
 * imaginary parts; `out` needs `2n^2` doubles.
 *
 * # Safety
 * `z` must hold `2n` doubles; `out` must hold `len` doubles.
 */
enum BergmanStatus bergman_metric_tensor(const struct BergmanKernel *kernel,
                                         const double *z,
                                         double *out,
                                         size_t len);

/**
 * Bergman distance with default options.
 *
 * # Safety
 * `z`, `w` must hold `2n` doubles; `out` writable.
 */
enum BergmanStatus bergman_distance(const struct BergmanKernel *kernel,
                                    const double *z,
                                    const double *w,
                                    double *out);

/**
 * Upper bound for the Fridman invariant with default options; `0` for
 * registered ball biholomorphs.
 *
 * # Safety
 * `z` must hold `2n` doubles; `out` writable.
 */
enum BergmanStatus bergman_fridman_upper(const struct BergmanKernel *kernel,
                                         const double *z,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERGMAN_H */
