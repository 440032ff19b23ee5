/* Copyright 2026 wpsim Contributors */
/* SPDX-License-Identifier: Apache-2.0 */

#ifndef WPSIM_H
#define WPSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 1 to 4 match the command-line exit codes.
 */
typedef enum WpsimStatus {
  WPSIM_STATUS_OK = 0,
  WPSIM_STATUS_CHECKS_FAILED = 1,
  WPSIM_STATUS_SCHEMA = 2,
  WPSIM_STATUS_NUMERICAL = 3,
  WPSIM_STATUS_IO = 4,
  WPSIM_STATUS_INVALID_ARGUMENT = 5,
  WPSIM_STATUS_PANIC = 6,
} WpsimStatus;

/**
 * Scenario report with its JSON encoding.
 */
typedef struct WpsimReport WpsimReport;

/**
 * Two-qubit density matrix.
 */
typedef struct WpsimState WpsimState;

/**
 * Witness expectations of one state.
 */
typedef struct WpsimWitnessResult {
  double w_tilde;
  double w_plus;
  double w_minus;
  double sigma_w;
  /**
   * 1 when `|⟨W̃⟩| > 1`.
   */
  int32_t certified;
  /**
   * +1 for `W₊`, -1 for `W₋`, 0 for neither.
   */
  int32_t certifying_witness;
} WpsimWitnessResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wpsim_version(void);

/**
 * Most recent error on this thread, or `NULL`. Free with [`wpsim_string_free`].
 */
char *wpsim_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void wpsim_string_free(char *s);

/**
 * Named state (`phi+`, `psi-`, `00`, `maximally-mixed`, ...).
 *
 * # Safety
 * `name` is a NUL-terminated string; `out` is writable.
 */
enum WpsimStatus wpsim_state_named(const char *name, struct WpsimState **out);

/**
 * State from a row-major 4×4 matrix given as separate real and imaginary
 * parts (16 entries each).
 *
 * # Safety
 * `re` and `im` point to 16 readable doubles; `out` is writable.
 */
enum WpsimStatus wpsim_state_from_matrix(const double *re,
                                         const double *im,
                                         struct WpsimState **out);

/**
 * # Safety
 * `state` comes from this library (or is `NULL`) and is not used afterwards.
 */
void wpsim_state_free(struct WpsimState *state);

/**
 * Witness expectations and the certification verdict.
 *
 * # Safety
 * `state` is a live handle; `out` is writable.
 */
enum WpsimStatus wpsim_certify(const struct WpsimState *state, struct WpsimWitnessResult *out);

/**
 * Runs a scenario (`witness`, `gas`, `radiation`, `cavity`, `verify`) from
 * JSON config text. Relative paths resolve against the working directory.
 * A report is produced for both `WPSIM_STATUS_OK` and
 * `WPSIM_STATUS_CHECKS_FAILED`.
 *
 * # Safety
 * `subcommand` and `config_json` are NUL-terminated strings (`config_json`
 * may be `NULL` for `verify`); `out` is writable.
 */
enum WpsimStatus wpsim_run(const char *subcommand,
                           const char *config_json,
                           uint64_t seed,
                           struct WpsimReport **out);

/**
 * Whether every check in the report passed.
 *
 * # Safety
 * `report` is a live handle.
 */
bool wpsim_report_passed(const struct WpsimReport *report);

/**
 * Number of checks in the report.
 *
 * # Safety
 * `report` is a live handle.
 */
size_t wpsim_report_check_count(const struct WpsimReport *report);

/**
 * JSON encoding of the report, borrowed until the handle is freed.
 *
 * # Safety
 * `report` is a live handle.
 */
const char *wpsim_report_json(const struct WpsimReport *report);

/**
 * # Safety
 * `report` comes from this library (or is `NULL`) and is not used afterwards.
 */
void wpsim_report_free(struct WpsimReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WPSIM_H */
