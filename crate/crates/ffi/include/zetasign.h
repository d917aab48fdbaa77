#ifndef ZETASIGN_H
#define ZETASIGN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which density `zs_density` computes.
typedef enum ZsDensityKind {
  // `|arg zeta| > pi/2`
  ZS_DENSITY_KIND_D = 0,
  // `Re zeta < 0`
  ZS_DENSITY_KIND_D_MINUS = 1,
  // `Re zeta > 0`
  ZS_DENSITY_KIND_D_PLUS = 2,
  // `|arg zeta| > (2k+1) pi/2`
  ZS_DENSITY_KIND_AK = 3,
  // `d - d_minus`
  ZS_DENSITY_KIND_GAP = 4,
} ZsDensityKind;

// Status codes; the nonzero ones below 7 match the command-line exit codes.
typedef enum ZsStatus {
  ZS_STATUS_OK = 0,
  ZS_STATUS_INVALID_ARGUMENT = 2,
  ZS_STATUS_DOMAIN = 3,
  ZS_STATUS_PRECISION = 4,
  ZS_STATUS_INVARIANT = 5,
  ZS_STATUS_CONVERGENCE = 6,
  ZS_STATUS_NULL_POINTER = 7,
  ZS_STATUS_BUFFER_TOO_SMALL = 8,
  ZS_STATUS_PANIC = 9,
} ZsStatus;

// Opaque evaluator of `psi_sigma(x)` for `|x| <= xmax`.
typedef struct ZsPsi ZsPsi;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates an evaluator of `psi_sigma` on `|x| <= xmax` good to `digits`
// decimal places. `sigma` is text such as `"0.8"` or `"0.5+1e-11"`.
//
// # Safety
// `sigma` must be a NUL-terminated string and `out` a valid pointer.
enum ZsStatus zs_psi_new(const char *sigma, double xmax, uint32_t digits, struct ZsPsi **out);

// `psi_sigma(x)` rounded to double, with its error bound in `*error`
// (may be null).
//
// # Safety
// `h` must come from `zs_psi_new`; `value` must be valid.
enum ZsStatus zs_psi_eval(const struct ZsPsi *h, double x, double *value, double *error);

// `psi_sigma(x)` as decimal text with the handle's digit count.
//
// # Safety
// `h` must come from `zs_psi_new`; `buf` must hold `len` bytes; `needed`
// may be null.
enum ZsStatus zs_psi_eval_text(const struct ZsPsi *h,
                               double x,
                               char *buf,
                               size_t len,
                               size_t *needed);

// Releases an evaluator; null is ignored.
//
// # Safety
// `h` must come from `zs_psi_new` and not be used afterwards.
void zs_psi_free(struct ZsPsi *h);

// A density at `sigma` to `digits` significant digits. `k` is used only
// for `ZS_DENSITY_KIND_AK`. The value goes to `buf` as text; `*value` and
// `*error` (either may be null) receive doubles.
//
// # Safety
// `sigma` must be NUL-terminated; `buf` must hold `len` bytes.
enum ZsStatus zs_density(const char *sigma,
                         enum ZsDensityKind kind,
                         uint32_t k,
                         uint32_t digits,
                         double *value,
                         double *error,
                         char *buf,
                         size_t len,
                         size_t *needed);

// The exact coefficient `q_{n,k}`, `1 <= k <= n`, in decimal.
//
// # Safety
// `buf` must hold `len` bytes; `needed` may be null.
enum ZsStatus zs_qcoeff(uint32_t n, uint32_t k, char *buf, size_t len, size_t *needed);

// Message for the last failed call on this thread; empty after success.
//
// # Safety
// `buf` must hold `len` bytes; `needed` may be null.
enum ZsStatus zs_last_error(char *buf, size_t len, size_t *needed);

// Library version as a static NUL-terminated string.
const char *zs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZETASIGN_H */
