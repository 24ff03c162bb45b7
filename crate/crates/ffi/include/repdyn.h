#ifndef REPDYN_H
#define REPDYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Scenario codes accepted by [`repdyn_system_new`].
 */
#define REPDYN_SCENARIO_CONST 0

#define REPDYN_SCENARIO_BETA 1

#define REPDYN_SCENARIO_RHO 2

#define REPDYN_SCENARIO_DUAL 3

/**
 * Outcome codes written by [`repdyn_classify`].
 */
#define REPDYN_OUTCOME_UNDETERMINED -1

#define REPDYN_OUTCOME_CONTROL_DOMINANCE 0

#define REPDYN_OUTCOME_AUTOMATIC_DOMINANCE 1

#define REPDYN_OUTCOME_COEXISTENCE 2

#define REPDYN_OUTCOME_LIMIT_CYCLE 3

typedef enum RepdynStatus {
  REPDYN_STATUS_OK = 0,
  REPDYN_STATUS_NULL_POINTER = 1,
  REPDYN_STATUS_INVALID_ARGUMENT = 2,
  REPDYN_STATUS_NUMERICAL_FAILURE = 3,
  REPDYN_STATUS_UNSUPPORTED = 4,
  REPDYN_STATUS_PANIC = 5,
} RepdynStatus;

/**
 * A model: scenario plus parameters.
 */
typedef struct RepdynSystem RepdynSystem;

/**
 * A sampled trajectory.
 */
typedef struct RepdynTrajectory RepdynTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or an empty string. The
 * pointer stays valid until the next call into this library on the same
 * thread.
 */
const char *repdyn_last_error(void);

/**
 * Library version as a static string.
 */
const char *repdyn_version(void);

/**
 * Create a system. Lags are ignored when the scenario does not use them.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum RepdynStatus repdyn_system_new(uint32_t scenario,
                                    double a,
                                    double rho,
                                    double beta,
                                    double tau_beta,
                                    double tau_rho,
                                    struct RepdynSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`repdyn_system_new`] not yet freed.
 */
void repdyn_system_free(struct RepdynSystem *sys);

/**
 * Number of dynamic state components (1 to 3).
 *
 * # Safety
 * `sys` must be a live handle.
 */
size_t repdyn_system_dim(const struct RepdynSystem *sys);

/**
 * Right-hand side at `state` (`len` = dimension) into `out` (`len` doubles).
 *
 * # Safety
 * `state` and `out` must each point to `len` doubles.
 */
enum RepdynStatus repdyn_system_rhs(const struct RepdynSystem *sys,
                                    const double *state,
                                    size_t len,
                                    double *out);

/**
 * Integrate from `state0` to `t_end`, sampling every `dt`.
 *
 * # Safety
 * `state0` must point to `len` doubles and `out` to handle storage.
 */
enum RepdynStatus repdyn_integrate(const struct RepdynSystem *sys,
                                   const double *state0,
                                   size_t len,
                                   double t_end,
                                   double dt,
                                   struct RepdynTrajectory **out);

/**
 * Number of samples.
 *
 * # Safety
 * `tr` must be a live handle.
 */
size_t repdyn_trajectory_len(const struct RepdynTrajectory *tr);

/**
 * State components per sample.
 *
 * # Safety
 * `tr` must be a live handle.
 */
size_t repdyn_trajectory_dim(const struct RepdynTrajectory *tr);

/**
 * Copy sample times into `times` (`len` entries) and states, row-major with
 * `dim` columns, into `states` (`len * dim` entries). Either may be null.
 *
 * # Safety
 * Non-null buffers must be large enough.
 */
enum RepdynStatus repdyn_trajectory_copy(const struct RepdynTrajectory *tr,
                                         double *times,
                                         double *states);

/**
 * # Safety
 * `tr` must be null or a live handle.
 */
void repdyn_trajectory_free(struct RepdynTrajectory *tr);

/**
 * Long-run outcome from `state0` with default detection settings; writes
 * one of the `REPDYN_OUTCOME_*` codes.
 *
 * # Safety
 * `state0` must point to `len` doubles; `outcome` must be writable.
 */
enum RepdynStatus repdyn_classify(const struct RepdynSystem *sys,
                                  const double *state0,
                                  size_t len,
                                  int32_t *outcome);

/**
 * Hopf threshold of the lag for a single-feedback scenario; writes NaN
 * when no interior equilibrium can lose stability.
 *
 * # Safety
 * `tau_star` must be writable.
 */
enum RepdynStatus repdyn_hopf_threshold(uint32_t scenario,
                                        double a,
                                        double rho,
                                        double beta,
                                        double *tau_star);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REPDYN_H */
