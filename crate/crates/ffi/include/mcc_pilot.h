#ifndef MCC_PILOT_H
#define MCC_PILOT_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `budget` sentinel: choose the budget by the tightening loop.
 */
#define MCC_BUDGET_AUTO -1

/**
 * `budget` sentinel: no collinearity constraints (coverage-only).
 */
#define MCC_BUDGET_NONE -2

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum MccStatus {
  MCC_STATUS_OK = 0,
  MCC_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The design problem is proven infeasible under the requested rules.
   */
  MCC_STATUS_INFEASIBLE = 2,
  /**
   * The solver hit its time limit before finishing.
   */
  MCC_STATUS_TIMEOUT = 3,
  MCC_STATUS_INTERNAL_ERROR = 4,
} MccStatus;

/**
 * Opaque pilot pattern handle.
 */
typedef struct MccPattern MccPattern;

/**
 * Options for [`mcc_pattern_design`].
 */
typedef struct MccDesignOptions {
  /**
   * Hopping period / subband count (>= 2).
   */
  uint64_t k;
  /**
   * Redundant-collinearity budget: an explicit value, `MCC_BUDGET_AUTO`
   * for the tightening loop, or `MCC_BUDGET_NONE` for coverage-only.
   */
  int64_t budget;
  /**
   * Forbid four or more pilots on one modular line.
   */
  bool forbid_four_collinear;
  /**
   * Exclude symmetric pilot triples along a line.
   */
  bool symmetric_exclusion;
  /**
   * Wall-clock limit in seconds.
   */
  double time_limit_s;
  /**
   * Relative optimality gap tolerance (0 proves optimality).
   */
  double gap_tolerance;
} MccDesignOptions;

/**
 * Geometry metrics of a pattern (see the `metrics` CLI subcommand).
 */
typedef struct MccMetrics {
  uint64_t radius;
  uint64_t coverage_total;
  uint64_t redundant_lines;
  bool has_four_collinear;
  uint64_t symmetric_triples;
  double max_offpeak_coherence;
} MccMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds the 3GPP SRS-style block-hopping baseline.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum MccStatus mcc_pattern_baseline_3gpp(uint64_t k, int64_t f0, struct MccPattern **out);

/**
 * Builds the chirp baseline `f_t = t^2 mod k`.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum MccStatus mcc_pattern_baseline_chirp(uint64_t k, struct MccPattern **out);

/**
 * Builds a seeded uniformly random permutation pattern.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum MccStatus mcc_pattern_baseline_random(uint64_t k, uint64_t seed, struct MccPattern **out);

/**
 * Wraps an explicit schedule (one subband index per slot).
 *
 * # Safety
 * `schedule` must point to `len` readable entries; `out` must point to
 * writable storage for one pointer.
 */
enum MccStatus mcc_pattern_from_schedule(uint64_t k,
                                         const uint64_t *schedule,
                                         uint64_t len,
                                         struct MccPattern **out);

/**
 * Runs the two-stage exact optimizer.
 *
 * # Safety
 * `opts` must point to a valid options struct; `out` must point to writable
 * storage for one pointer.
 */
enum MccStatus mcc_pattern_design(const struct MccDesignOptions *opts, struct MccPattern **out);

/**
 * Grid size of a pattern (0 for a null handle).
 *
 * # Safety
 * `pattern` must be null or a live handle from this library.
 */
uint64_t mcc_pattern_k(const struct MccPattern *pattern);

/**
 * True iff every subband appears exactly once.
 *
 * # Safety
 * `pattern` must be null or a live handle from this library.
 */
bool mcc_pattern_is_permutation(const struct MccPattern *pattern);

/**
 * Copies the schedule into `buf` (length `len` >= k).
 *
 * # Safety
 * `pattern` must be a live handle; `buf` must point to `len` writable slots.
 */
enum MccStatus mcc_pattern_schedule(const struct MccPattern *pattern, uint64_t *buf, uint64_t len);

/**
 * Replaces the pattern with its cyclic column shift by `s` slots.
 *
 * # Safety
 * `pattern` must be a live handle from this library.
 */
enum MccStatus mcc_pattern_cyclic_shift(struct MccPattern *pattern, int64_t s);

/**
 * Computes the geometry metrics of a pattern.
 *
 * # Safety
 * `pattern` must be a live handle; `out` must point to writable storage.
 */
enum MccStatus mcc_pattern_metrics(const struct MccPattern *pattern, struct MccMetrics *out);

/**
 * Releases a pattern handle; null is a no-op.
 *
 * # Safety
 * `pattern` must be null or a handle not yet freed.
 */
void mcc_pattern_free(struct MccPattern *pattern);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mcc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCC_PILOT_H */
