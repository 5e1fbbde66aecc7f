#ifndef OPFLAB_H
#define OPFLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum OpflabStatus {
  OPFLAB_STATUS_OK = 0,
  OPFLAB_STATUS_NULL_POINTER = 1,
  OPFLAB_STATUS_INVALID_UTF8 = 2,
  OPFLAB_STATUS_INVALID_ARGUMENT = 3,
  OPFLAB_STATUS_DIMENSION_MISMATCH = 4,
  // Input violates a physical constraint (Hermiticity, normalization, positivity, support).
  OPFLAB_STATUS_NOT_PHYSICAL = 5,
  OPFLAB_STATUS_UNKNOWN_NAME = 6,
  OPFLAB_STATUS_BUDGET_EXCEEDED = 7,
  // Rank or stability diagnostics from a numerical routine.
  OPFLAB_STATUS_NUMERICAL = 8,
  OPFLAB_STATUS_IO = 9,
  OPFLAB_STATUS_PANIC = 10,
} OpflabStatus;

// Unit vector in `C^d`.
typedef struct OpflabKet OpflabKet;

// Outcome-probability function of some degree on `C^d`.
typedef struct OpflabOpf OpflabOpf;

// Result of a CLI-equivalent run.
typedef struct OpflabReport OpflabReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *opflab_last_error(void);

// # Safety
// `s` must come from this library or be null.
void opflab_string_free(char *s);

// `dim M_n^d`.
uint64_t opflab_dim_mn(size_t d, size_t n);

// `dim N_n^d`; zero when `d < 2`.
uint64_t opflab_dim_nn(size_t d, size_t n);

// Ket from `dim` amplitudes; `im` may be null for real amplitudes.
//
// # Safety
// `re` (and `im` if non-null) must point to `dim` doubles; `out` must be writable.
enum OpflabStatus opflab_ket_new(const double *re,
                                 const double *im,
                                 size_t dim,
                                 struct OpflabKet **out);

// # Safety
// `ket` must come from this library or be null.
void opflab_ket_free(struct OpflabKet *ket);

// OPF from a row-major `D × D` matrix with `D = d^n`.
//
// # Safety
// `re` (and `im` if non-null) must point to `D²` doubles; `out` must be writable.
enum OpflabStatus opflab_opf_from_matrix(size_t d,
                                         size_t n,
                                         const double *re,
                                         const double *im,
                                         struct OpflabOpf **out);

// The unit OPF `P₊` of degree `n` on `C^d`.
//
// # Safety
// `out` must be writable.
enum OpflabStatus opflab_opf_unit(size_t d, size_t n, struct OpflabOpf **out);

// Seeded random OPF of degree `n` on `C^d`.
//
// # Safety
// `out` must be writable.
enum OpflabStatus opflab_opf_random(uint64_t seed, size_t d, size_t n, struct OpflabOpf **out);

// # Safety
// `f` must come from this library or be null.
void opflab_opf_free(struct OpflabOpf *f);

// Local dimension `d`, or zero for a null handle.
//
// # Safety
// `f` must be a live handle or null.
size_t opflab_opf_dim(const struct OpflabOpf *f);

// Degree `n`, or zero for a null handle.
//
// # Safety
// `f` must be a live handle or null.
size_t opflab_opf_degree(const struct OpflabOpf *f);

// `f(ψ)`.
//
// # Safety
// Handles must be live; `value` must be writable.
enum OpflabStatus opflab_opf_evaluate(const struct OpflabOpf *f,
                                      const struct OpflabKet *psi,
                                      double *value);

// `f ⋆ g` under the named star product (`"quantum"` or `"toy"`).
//
// # Safety
// Handles must be live, `star` a NUL-terminated string, `out` writable.
enum OpflabStatus opflab_opf_star(const char *star,
                                  const struct OpflabOpf *f,
                                  const struct OpflabOpf *g,
                                  struct OpflabOpf **out);

// JSON document of the OPF; release with [`opflab_string_free`].
//
// # Safety
// `f` must be live and `out` writable.
enum OpflabStatus opflab_opf_to_json(const struct OpflabOpf *f, char **out);

// Runs a subcommand given its argument vector (without the program name),
// exactly as the `opflab` binary would, but returns the report instead of
// printing it. A report whose checks fail is still `Ok`; query it with
// [`opflab_report_passed`].
//
// # Safety
// `argv` must point to `argc` NUL-terminated strings; `out` must be writable.
enum OpflabStatus opflab_report_run(const char *const *argv,
                                    size_t argc,
                                    struct OpflabReport **out);

// # Safety
// `report` must be live and `passed` writable.
enum OpflabStatus opflab_report_passed(const struct OpflabReport *report, bool *passed);

// Number of check records in the report, or zero for a null handle.
//
// # Safety
// `report` must be live or null.
size_t opflab_report_len(const struct OpflabReport *report);

// Report as JSON (`table = false`) or aligned text.
//
// # Safety
// `report` must be live and `out` writable.
enum OpflabStatus opflab_report_render(const struct OpflabReport *report, bool table, char **out);

// # Safety
// `report` must come from this library or be null.
void opflab_report_free(struct OpflabReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPFLAB_H */
