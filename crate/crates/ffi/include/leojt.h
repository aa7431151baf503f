#ifndef LEOJT_H
#define LEOJT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LeojtAssociationMode {
  LEOJT_ASSOCIATION_MODE_SINGLE = 0,
  LEOJT_ASSOCIATION_MODE_FULL = 1,
  LEOJT_ASSOCIATION_MODE_PROPOSED = 2,
} LeojtAssociationMode;

/**
 * Result of every fallible call.
 */
typedef enum LeojtStatus {
  LEOJT_STATUS_OK = 0,
  LEOJT_STATUS_NULL_POINTER = 1,
  /**
   * An argument is out of range (index, mode, FFT size, UTF-8).
   */
  LEOJT_STATUS_INVALID_ARGUMENT = 2,
  LEOJT_STATUS_INVALID_CONFIG = 3,
  LEOJT_STATUS_CONFIG_PARSE = 4,
  LEOJT_STATUS_DIMENSION_MISMATCH = 5,
  LEOJT_STATUS_DEGENERATE_LINK = 6,
  LEOJT_STATUS_INVISIBLE_SERVING = 7,
  LEOJT_STATUS_EMPTY_INPUT = 8,
  LEOJT_STATUS_IO = 9,
  LEOJT_STATUS_PANIC = 10,
} LeojtStatus;

/**
 * Opaque scenario configuration.
 */
typedef struct LeojtConfig LeojtConfig;

/**
 * Opaque evaluation of one association mode on one drop.
 */
typedef struct LeojtReport LeojtReport;

/**
 * Per-UT summary of a drop. Powers are summed over subcarriers (W).
 */
typedef struct LeojtUtResult {
  /**
   * bits/s
   */
  double rate;
  /**
   * bits/s/Hz
   */
  double spectral_efficiency;
  /**
   * Linear SINR averaged over subcarriers
   */
  double mean_sinr;
  size_t attach;
  /**
   * Nonzero when the UT saw no satellite and was left out
   */
  bool excluded;
  double desired;
  double mui;
  double ici;
  double isi;
  double noise;
} LeojtUtResult;

typedef struct LeojtComplex {
  double re;
  double im;
} LeojtComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *leojt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *leojt_version(void);

/**
 * Built-in preset, `"paper"` or `"desk"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum LeojtStatus leojt_config_preset(const char *name, struct LeojtConfig **out);

/**
 * Parses scenario TOML (same format as the CLI config files).
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum LeojtStatus leojt_config_from_toml(const char *toml, struct LeojtConfig **out);

/**
 * Applies `key = value` overrides in place. On failure `config` is unchanged.
 *
 * # Safety
 * `config` must come from a constructor in this library; `overrides` must be
 * a NUL-terminated string.
 */
enum LeojtStatus leojt_config_apply(struct LeojtConfig *config, const char *overrides);

/**
 * Serializes every key to TOML. Release the string with [`leojt_string_free`].
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum LeojtStatus leojt_config_to_toml(const struct LeojtConfig *config, char **out);

/**
 * `(n_sats, n_uts, n_subcarriers)` of a config.
 *
 * # Safety
 * `config` must be a live handle; the outputs must be writable.
 */
enum LeojtStatus leojt_config_dimensions(const struct LeojtConfig *config,
                                         size_t *n_sats,
                                         size_t *n_uts,
                                         size_t *n_subcarriers);

/**
 * # Safety
 * `config` must be NULL or a handle not yet freed.
 */
void leojt_config_free(struct LeojtConfig *config);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void leojt_string_free(char *s);

/**
 * Samples one drop from `seed` and evaluates `mode`, a
 * [`LeojtAssociationMode`] value, on it. Identical seeds give identical reports.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum LeojtStatus leojt_drop_evaluate(const struct LeojtConfig *config,
                                     int32_t mode,
                                     uint64_t seed,
                                     struct LeojtReport **out);

/**
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum LeojtStatus leojt_report_n_uts(const struct LeojtReport *report, size_t *out);

/**
 * Summary of UT `ut`.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum LeojtStatus leojt_report_ut(const struct LeojtReport *report,
                                 size_t ut,
                                 struct LeojtUtResult *out);

/**
 * Copies the per-subcarrier linear SINR of UT `ut` into `buf`, which must
 * hold exactly `n_subcarriers` values.
 *
 * # Safety
 * `report` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum LeojtStatus leojt_report_sinr(const struct LeojtReport *report,
                                   size_t ut,
                                   double *buf,
                                   size_t len);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void leojt_report_free(struct LeojtReport *report);

/**
 * Current-symbol leakage from subcarrier `n_prime` onto `n` for a link
 * offset by `delta` samples with `excess` samples past the guard.
 *
 * # Safety
 * `out` must be writable.
 */
enum LeojtStatus leojt_ici_leakage(size_t n,
                                   size_t n_prime,
                                   size_t delta,
                                   size_t excess,
                                   size_t fft,
                                   struct LeojtComplex *out);

/**
 * Previous-symbol leakage, arguments as in [`leojt_ici_leakage`].
 *
 * # Safety
 * `out` must be writable.
 */
enum LeojtStatus leojt_isi_leakage(size_t n,
                                   size_t n_prime,
                                   size_t delta,
                                   size_t excess,
                                   size_t fft,
                                   struct LeojtComplex *out);

/**
 * Closed-form spectral-efficiency bound at `cp_add`: the per-UT sum over
 * subcarriers and the same divided by the FFT size (bits/s/Hz).
 *
 * # Safety
 * `config` must be a live handle; the outputs must be writable.
 */
enum LeojtStatus leojt_bound(const struct LeojtConfig *config,
                             size_t cp_add,
                             bool include_cp,
                             double *bound,
                             double *bound_per_hz);

/**
 * Grid value of `cp_add` maximizing the bound, ties to the smaller value.
 *
 * # Safety
 * `config` must be a live handle; `grid` must point to `len` values.
 */
enum LeojtStatus leojt_optimal_cp(const struct LeojtConfig *config,
                                  const size_t *grid,
                                  size_t len,
                                  bool include_cp,
                                  size_t *out);

/**
 * Sync point in `[0, search_len)` that maximizes the number of visible
 * satellites whose offset falls inside `window`, and that number.
 *
 * # Safety
 * `delays` and `visible` must each point to `len` values; outputs must be writable.
 */
enum LeojtStatus leojt_optimize_sync(const int64_t *delays,
                                     const bool *visible,
                                     size_t len,
                                     size_t symbol_len,
                                     size_t window,
                                     size_t search_len,
                                     size_t *sync,
                                     size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEOJT_H */
