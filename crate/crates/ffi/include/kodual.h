#ifndef KODUAL_H
#define KODUAL_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KdStatus {
  KD_STATUS_OK = 0,
  KD_STATUS_NULL_POINTER = 1,
  KD_STATUS_INVALID_UTF8 = 2,
  KD_STATUS_PARSE = 3,
  KD_STATUS_INVALID_PARAMETER = 4,
  KD_STATUS_NOT_A_GENERATOR = 5,
  KD_STATUS_NO_SHIFT = 6,
  KD_STATUS_AMBIGUOUS_SHIFT = 7,
  KD_STATUS_OUTSIDE_WINDOW = 8,
  KD_STATUS_COMPUTATION = 9,
  KD_STATUS_PANIC = 10,
} KdStatus;

typedef enum KdC2Module {
  KD_C2_MODULE_TRIVIAL = 0,
  KD_C2_MODULE_SIGN = 1,
  KD_C2_MODULE_REGULAR = 2,
} KdC2Module;

typedef enum KdReference {
  KD_REFERENCE_KO = 0,
  KD_REFERENCE_KU = 1,
} KdReference;

typedef enum KdChartFormat {
  KD_CHART_FORMAT_ASCII = 0,
  KD_CHART_FORMAT_SVG = 1,
} KdChartFormat;

// Groups indexed by the integers of a window `[lo, hi]`.
typedef struct KdGraded KdGraded;

// A finitely generated abelian group `Z^r ⊕ ⊕ Z/d_i` with `d_1 | d_2 | ...`.
typedef struct KdGroup KdGroup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Owned by the library;
// valid until the next failing call on the same thread.
const char *kd_last_error(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void kd_string_free(char *s);

// # Safety
// `g` must be null or a handle returned by this library, not yet freed.
void kd_group_free(struct KdGroup *g);

// # Safety
// `g` must be null or a handle returned by this library, not yet freed.
void kd_graded_free(struct KdGraded *g);

// Cokernel of the `rows × cols` integer matrix stored row-major in `entries`.
//
// # Safety
// `entries` must point to `rows * cols` integers (it may be null when that is 0).
enum KdStatus kd_cokernel(uintptr_t rows,
                          uintptr_t cols,
                          const int64_t *entries,
                          struct KdGroup **out);

// # Safety
// `g` must be a live group handle.
enum KdStatus kd_group_free_rank(const struct KdGroup *g, uintptr_t *out);

// Number of torsion invariants.
//
// # Safety
// `g` must be a live group handle.
enum KdStatus kd_group_torsion_len(const struct KdGroup *g, uintptr_t *out);

// The `i`-th torsion invariant as a decimal string (invariants can exceed 64 bits).
//
// # Safety
// `g` must be a live group handle.
enum KdStatus kd_group_torsion(const struct KdGroup *g, uintptr_t i, char **out);

// Display form, e.g. `Z ⊕ Z/2`.
//
// # Safety
// `g` must be a live group handle.
enum KdStatus kd_group_to_string(const struct KdGroup *g, char **out);

// Tate cohomology of `C_2` in degree `n` with coefficients in a rank one or regular module.
//
// # Safety
// `out` must be valid for writes.
enum KdStatus kd_c2_tate(enum KdC2Module module, int64_t n, struct KdGroup **out);

// `H^n` of the 2-adic units with coefficients in `π_{2k} KU_2`, computed at `Z/2^precision`.
//
// # Safety
// `out` must be valid for writes.
enum KdStatus kd_units_cohomology(uint32_t k,
                                  uint32_t precision,
                                  uintptr_t n,
                                  struct KdGroup **out);

// Kernel of `α` on functions on the level-`level` orbit of `l`, with values in `Z/2^precision`.
//
// # Safety
// `out` must be valid for writes.
enum KdStatus kd_picard_kernel(int64_t l, uint32_t level, uint32_t precision, struct KdGroup **out);

// `π_k KO` for `lo ≤ k ≤ hi`, read off the homotopy fixed point spectral sequence.
//
// # Safety
// `out` must be valid for writes.
enum KdStatus kd_ko_homotopy(int64_t lo, int64_t hi, struct KdGraded **out);

// Parses `{"window":[lo,hi],"groups":{"0":"Z","1":"Z/2"}}`; missing degrees are zero.
//
// # Safety
// `json` must be a NUL-terminated string.
enum KdStatus kd_graded_from_json(const char *json, struct KdGraded **out);

// # Safety
// `g` must be a live graded handle.
enum KdStatus kd_graded_to_json(const struct KdGraded *g, char **out);

// # Safety
// `g` must be a live graded handle; `lo` and `hi` must be valid for writes.
enum KdStatus kd_graded_window(const struct KdGraded *g, int64_t *lo, int64_t *hi);

// The group in degree `k`, as a new handle.
//
// # Safety
// `g` must be a live graded handle.
enum KdStatus kd_graded_get(const struct KdGraded *g, int64_t k, struct KdGroup **out);

// Homotopy of the Anderson dual: `π_{-k}` built from `Hom(π_k, Z)` and `Ext(π_{k-1}, Z)`.
//
// # Safety
// `g` must be a live graded handle.
enum KdStatus kd_anderson_dual(const struct KdGraded *g, struct KdGraded **out);

// The shift `t` in `[0, period)` with `π_k(g) ≅ π_{k-t}(reference)`.
//
// # Safety
// `g` must be a live graded handle.
enum KdStatus kd_detect_shift(const struct KdGraded *g,
                              enum KdReference reference,
                              int64_t period,
                              int64_t *out);

// The `E_4` chart of the homotopy fixed point spectral sequence for `KO`.
//
// # Safety
// `out` must be valid for writes.
enum KdStatus kd_hfpss_chart(enum KdChartFormat format, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KODUAL_H */
