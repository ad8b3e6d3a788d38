#ifndef JAMGAME_H
#define JAMGAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Position of the state relative to the randomization region.
 */
typedef enum {
  JG_REGION_BELOW = 0,
  JG_REGION_INSIDE = 1,
  JG_REGION_ABOVE = 2,
  JG_REGION_UNDEFINED = 3,
} JgRegion;

/**
 * Saddle-point classification.
 */
typedef enum {
  JG_SADDLE_KIND_NONTRIVIAL_MIXED = 0,
  JG_SADDLE_KIND_DEGENERATE_FLAT = 1,
  JG_SADDLE_KIND_TRIVIAL_BLOCKING = 2,
  JG_SADDLE_KIND_TRIVIAL_STAY = 3,
  JG_SADDLE_KIND_NONE_FOUND = 4,
} JgSaddleKind;

/**
 * Result codes.
 */
typedef enum {
  JG_STATUS_OK = 0,
  JG_STATUS_NULL_POINTER = 1,
  JG_STATUS_INVALID_ARGUMENT = 2,
  JG_STATUS_INVALID_SCENARIO = 3,
  JG_STATUS_ASSUMPTION_FAILURE = 4,
  JG_STATUS_UNSUPPORTED = 5,
  JG_STATUS_BUFFER_TOO_SMALL = 6,
  JG_STATUS_INTERNAL = 7,
} JgStatus;

/**
 * Opaque scenario handle.
 */
typedef struct JgScenario JgScenario;

typedef struct {
  JgSaddleKind kind;
  /**
   * Nonzero when `u_star` and `p_tilde` are set.
   */
  int32_t has_saddle;
  double u_star;
  /**
   * Weights on (blocking channel, current channel).
   */
  double p_tilde[2];
  /**
   * Game value `J`; NaN when no saddle was found.
   */
  double value;
  size_t blocking_index;
  size_t j_minus;
  double control_lo;
  double control_hi;
  size_t indifference_points;
  /**
   * Oracle gap at the scenario's grid sizes.
   */
  double gap;
} JgSolveResult;

typedef struct {
  JgRegion region;
  /**
   * Nonzero when `z` is defined.
   */
  int32_t has_z;
  double z;
  double lower;
  double upper;
} JgRegionResult;

typedef struct {
  double j1_hat;
  double j2_hat;
  double gap;
  int32_t saddle_passed;
  double mc_mean;
  double mc_half_width;
  uint64_t mc_trials;
  /**
   * Overall verdict.
   */
  int32_t passed;
} JgVerifyResult;

typedef struct {
  double mean;
  double half_width_3sigma;
  double std_dev;
  uint64_t trials;
  double passing_fraction;
  /**
   * `pᵀq`.
   */
  double passing_probability;
} JgMonteCarloResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Release with
 * [`jg_string_free`].
 */
char *jg_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void jg_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *jg_version(void);

/**
 * Parses a TOML scenario document.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
JgStatus jg_scenario_from_toml(const char *text, JgScenario **out);

/**
 * Builds an LQ scenario: `a` is `n_state × n_state` row-major, `b` and `x`
 * have `n_state` entries, `q` has `n_channels` strictly increasing entries,
 * and `j_minus` is 1-based. Solver and simulation settings take their
 * defaults.
 *
 * # Safety
 * Every array must hold the stated number of doubles; `out` must be writable.
 */
JgStatus jg_scenario_new_lq(const double *a,
                            const double *b,
                            const double *x,
                            size_t n_state,
                            const double *q,
                            size_t n_channels,
                            size_t j_minus,
                            double tau,
                            JgScenario **out);

/**
 * Releases a scenario. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void jg_scenario_free(JgScenario *s);

/**
 * Serializes the scenario, with all defaults filled in, as TOML. Returns
 * NULL on failure; release with [`jg_string_free`].
 *
 * # Safety
 * `s` must be a live handle.
 */
char *jg_scenario_to_toml(const JgScenario *s);

/**
 * Number of channels, or 0 for a NULL handle.
 *
 * # Safety
 * `s` must be NULL or a live handle.
 */
size_t jg_scenario_n_channels(const JgScenario *s);

/**
 * Overrides the Monte Carlo trial count and seed.
 *
 * # Safety
 * `s` must be a live handle.
 */
JgStatus jg_scenario_set_monte_carlo(JgScenario *s, uint64_t trials, uint64_t seed);

/**
 * Overrides the oracle grid sizes (each at least 3).
 *
 * # Safety
 * `s` must be a live handle.
 */
JgStatus jg_scenario_set_grids(JgScenario *s, size_t u_points, size_t p_points);

/**
 * Solves the scenario. When `policy_out` is non-null it receives the full
 * jammer policy `p*` and must hold `policy_len ≥ n_channels` doubles; it is
 * left untouched when no saddle was found.
 *
 * # Safety
 * `s` must be a live handle, `out` writable, and `policy_out` NULL or
 * writable for `policy_len` doubles.
 */
JgStatus jg_solve(const JgScenario *s, JgSolveResult *out, double *policy_out, size_t policy_len);

/**
 * Randomization-region diagnostics of an LQ scenario.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
JgStatus jg_region(const JgScenario *s, JgRegionResult *out);

/**
 * Solves, then checks the answer against the grid oracle, the saddle
 * inequalities and a Monte Carlo run. A failed verdict is reported in
 * `out->passed`, not as an error.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
JgStatus jg_verify(const JgScenario *s, JgVerifyResult *out);

/**
 * Simulates the switching step at control `u` under `policy`
 * (`policy_len = n_channels` weights summing to 1).
 *
 * # Safety
 * `s` must be a live handle, `policy` readable for `policy_len` doubles and
 * `out` writable.
 */
JgStatus jg_monte_carlo(const JgScenario *s,
                        double u,
                        const double *policy,
                        size_t policy_len,
                        uint64_t trials,
                        uint64_t seed,
                        JgMonteCarloResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JAMGAME_H */
