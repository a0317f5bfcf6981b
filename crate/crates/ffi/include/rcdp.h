#ifndef RCDP_H
#define RCDP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RcdpSolveStatus {
  RCDP_SOLVE_STATUS_OPTIMAL_UNCONSTRAINED = 0,
  RCDP_SOLVE_STATUS_OPTIMAL_DUAL_CONDITION = 1,
  RCDP_SOLVE_STATUS_OPTIMAL_GAP_CLOSED = 2,
  RCDP_SOLVE_STATUS_BEST_FEASIBLE = 3,
  RCDP_SOLVE_STATUS_INFEASIBLE = 4,
} RcdpSolveStatus;

typedef enum RcdpStatus {
  RCDP_STATUS_OK = 0,
  /**
   * The call succeeded but no feasible plan or traversal exists.
   */
  RCDP_STATUS_INFEASIBLE = 1,
  RCDP_STATUS_NULL_POINTER = 2,
  RCDP_STATUS_INVALID_ARGUMENT = 3,
  RCDP_STATUS_PARSE = 4,
  RCDP_STATUS_INTERNAL = 5,
} RcdpStatus;

/**
 * A problem instance.
 */
typedef struct RcdpEnvironment RcdpEnvironment;

/**
 * Result of running a policy against the ground truth.
 */
typedef struct RcdpOutcome RcdpOutcome;

/**
 * Result of a constrained solve.
 */
typedef struct RcdpSolveReport RcdpSolveReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rcdp_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *rcdp_last_error(void);

/**
 * Parses an environment from JSON.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` a valid pointer.
 */
enum RcdpStatus rcdp_env_from_json(const char *json, struct RcdpEnvironment **out);

/**
 * The built-in six-obstacle example.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RcdpStatus rcdp_env_toy(struct RcdpEnvironment **out);

/**
 * Number of obstacles in the environment, or 0 for null.
 *
 * # Safety
 * `env` must be null or a live handle.
 */
size_t rcdp_env_obstacle_count(const struct RcdpEnvironment *env);

/**
 * # Safety
 * `env` must be null or a handle from this library, not yet freed.
 */
void rcdp_env_free(struct RcdpEnvironment *env);

/**
 * Solves the constrained planning problem from source to target. `risk` uses the
 * grammar `rd | dt | lu:<alpha> | lu-delta | lu-bayes:<alpha_max>`. A positive
 * `n_max` selects the count budget and `delta_max` is ignored. `sne` nonzero selects
 * single-phase elimination. Returns `Infeasible` (with a report) when no plan exists.
 *
 * # Safety
 * `env` must be a live handle, `risk` a NUL-terminated string, `out` a valid pointer.
 */
enum RcdpStatus rcdp_solve(const struct RcdpEnvironment *env,
                           const char *risk,
                           double delta_max,
                           uint32_t n_max,
                           int32_t sne,
                           struct RcdpSolveReport **out);

/**
 * # Safety
 * `r` must be a live handle.
 */
enum RcdpSolveStatus rcdp_report_status(const struct RcdpSolveReport *r);

/**
 * Surrogate cost of the returned path; NaN when infeasible or null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double rcdp_report_cost(const struct RcdpSolveReport *r);

/**
 * Disambiguation weight of the returned path; NaN when infeasible or null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double rcdp_report_weight(const struct RcdpSolveReport *r);

/**
 * Relative duality gap; NaN for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double rcdp_report_gap(const struct RcdpSolveReport *r);

/**
 * Active vertex count after elimination; 0 for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t rcdp_report_graph_size(const struct RcdpSolveReport *r);

/**
 * Number of vertices on the returned path; 0 for null or infeasible.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t rcdp_report_path_len(const struct RcdpSolveReport *r);

/**
 * Copies up to `cap` path vertex ids into `buf` and returns the number copied.
 *
 * # Safety
 * `r` must be a live handle and `buf` must hold `cap` elements.
 */
size_t rcdp_report_path(const struct RcdpSolveReport *r, uint32_t *buf, size_t cap);

/**
 * Report as a JSON string owned by the caller; release with [`rcdp_string_free`].
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum RcdpStatus rcdp_report_to_json(const struct RcdpSolveReport *r, char **out);

/**
 * # Safety
 * `r` must be null or a handle from this library, not yet freed.
 */
void rcdp_report_free(struct RcdpSolveReport *r);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rcdp_string_free(char *s);

/**
 * Runs a policy (`greedy-rd | greedy-dt | benchmark | rcdp:<risk>`) against the
 * environment's ground truth. Budget arguments as in [`rcdp_solve`]. Returns
 * `Infeasible` (with an outcome) when the traversal did not reach the target.
 *
 * # Safety
 * `env` must be a live handle, `policy` a NUL-terminated string, `out` a valid pointer.
 */
enum RcdpStatus rcdp_traverse(const struct RcdpEnvironment *env,
                              const char *policy,
                              double delta_max,
                              uint32_t n_max,
                              struct RcdpOutcome **out);

/**
 * 1 when the target was reached, 0 otherwise.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
int32_t rcdp_outcome_success(const struct RcdpOutcome *o);

/**
 * Walked length plus disambiguation cost paid; NaN for null.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
double rcdp_outcome_cost(const struct RcdpOutcome *o);

/**
 * Total disambiguation cost paid; NaN for null.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
double rcdp_outcome_disambiguation_cost(const struct RcdpOutcome *o);

/**
 * Number of disambiguations performed; 0 for null.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
size_t rcdp_outcome_disambiguations(const struct RcdpOutcome *o);

/**
 * # Safety
 * `o` must be null or a handle from this library, not yet freed.
 */
void rcdp_outcome_free(struct RcdpOutcome *o);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCDP_H */
