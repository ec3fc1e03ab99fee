#ifndef PROJFLOW_H
#define PROJFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PfMethod {
  PF_METHOD_JACOBI = 0,
  PF_METHOD_GAUSS_SEIDEL = 1,
  PF_METHOD_SOR = 2,
  PF_METHOD_SLOR_A = 3,
  PF_METHOD_SLOR_B = 4,
  PF_METHOD_ADI = 5,
  PF_METHOD_MULTIGRID = 6,
} PfMethod;

typedef enum PfNorm {
  PF_NORM_MAX_CHANGE = 0,
  PF_NORM_RESIDUAL_L2 = 1,
  PF_NORM_RESIDUAL_MAX = 2,
} PfNorm;

/**
 * Result code of every fallible call.
 */
typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_POINTER = 1,
  PF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The iteration stopped at its limit; outputs are still written.
   */
  PF_STATUS_NOT_CONVERGED = 3,
  PF_STATUS_SOLVER_FAILURE = 4,
  PF_STATUS_STEP_FAILURE = 5,
  PF_STATUS_BUFFER_TOO_SMALL = 6,
  PF_STATUS_PANIC = 7,
} PfStatus;

/**
 * Flow quantities readable from a simulation.
 */
typedef enum PfField {
  PF_FIELD_PRESSURE = 0,
  PF_FIELD_U = 1,
  PF_FIELD_V = 2,
  PF_FIELD_STREAM = 3,
  PF_FIELD_VORTICITY = 4,
} PfField;

/**
 * Pressure Poisson problem.
 */
typedef struct PfPoisson PfPoisson;

/**
 * Time-marching flow simulation.
 */
typedef struct PfSimulation PfSimulation;

typedef struct PfSolverConfig {
  enum PfMethod method;
  double omega;
  double tol;
  size_t max_iter;
  enum PfNorm norm;
  /**
   * 0 coarsens as far as the grid allows.
   */
  size_t mg_levels;
  size_t mg_pre_smooth;
  size_t mg_post_smooth;
  size_t mg_coarse_sweeps;
} PfSolverConfig;

typedef struct PfSolveStats {
  size_t iterations;
  double work_units;
  double wall_clock_s;
  double final_error;
  bool converged;
} PfSolveStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default settings for `method`.
 */
struct PfSolverConfig pf_solver_config_default(enum PfMethod method);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *pf_last_error_message(void);

/**
 * First pressure problem of the unit lid-driven cavity with `n x n` cells.
 *
 * # Safety
 * `out` must be valid for writing a handle pointer.
 */
enum PfStatus pf_poisson_cavity_first_step(size_t n, double re, struct PfPoisson **out);

/**
 * First pressure problem of the default chamber.
 *
 * # Safety
 * `out` must be valid for writing a handle pointer.
 */
enum PfStatus pf_poisson_chamber_first_step(double re, struct PfPoisson **out);

/**
 * Zero-gradient manufactured problem with `nodes` grid lines per side.
 *
 * # Safety
 * `out` must be valid for writing a handle pointer.
 */
enum PfStatus pf_poisson_manufactured(size_t nodes, struct PfPoisson **out);

/**
 * Zero-gradient problem on an `nx x ny` rectangle from interior source values.
 *
 * # Safety
 * `rhs` must point to `nx * ny` readable values and `out` must be valid for
 * writing a handle pointer.
 */
enum PfStatus pf_poisson_neumann(size_t nx,
                                 size_t ny,
                                 double dx,
                                 double dy,
                                 const double *rhs,
                                 struct PfPoisson **out);

/**
 * Interior cell counts of a problem.
 *
 * # Safety
 * `problem` must be a live handle; `nx` and `ny` must be writable.
 */
enum PfStatus pf_poisson_shape(const struct PfPoisson *problem, size_t *nx, size_t *ny);

/**
 * Solves from a zero initial guess. `solution` receives the interior
 * pressure when not null; `stats` receives the iteration summary when not
 * null. Returns [`PfStatus::NotConverged`] if the iteration limit was hit.
 *
 * # Safety
 * `problem` and `config` must be valid; `solution`, if not null, must be
 * writable for `len` values; `stats`, if not null, must be writable.
 */
enum PfStatus pf_poisson_solve(const struct PfPoisson *problem,
                               const struct PfSolverConfig *config,
                               double *solution,
                               size_t len,
                               struct PfSolveStats *stats);

/**
 * Releases a problem handle; null is ignored.
 *
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void pf_poisson_free(struct PfPoisson *problem);

/**
 * Lid-driven cavity of `lx x ly` with `nx x ny` cells, lid speed `vw` and
 * `dt = sigma Re h^2`. Time steps beyond the stability limit are refused.
 *
 * # Safety
 * `config` must be valid and `out` writable.
 */
enum PfStatus pf_simulation_cavity(size_t nx,
                                   size_t ny,
                                   double lx,
                                   double ly,
                                   double vw,
                                   double re,
                                   double sigma,
                                   const struct PfSolverConfig *config,
                                   struct PfSimulation **out);

/**
 * Default chamber with inflow speed `inlet_speed`.
 *
 * # Safety
 * `config` must be valid and `out` writable.
 */
enum PfStatus pf_simulation_chamber(double inlet_speed,
                                    double re,
                                    double sigma,
                                    const struct PfSolverConfig *config,
                                    struct PfSimulation **out);

/**
 * Advances `steps` time steps. Stops at the first failure.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum PfStatus pf_simulation_step(struct PfSimulation *sim, size_t steps);

/**
 * Elapsed simulated time, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double pf_simulation_time(const struct PfSimulation *sim);

/**
 * Cell-centre `u` at the monitor cell, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double pf_simulation_monitor(const struct PfSimulation *sim);

/**
 * Interior cell counts of the simulation grid.
 *
 * # Safety
 * `sim` must be a live handle; `nx` and `ny` must be writable.
 */
enum PfStatus pf_simulation_shape(const struct PfSimulation *sim, size_t *nx, size_t *ny);

/**
 * Copies one interior field into `out`, which must hold `nx * ny` values.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable for `len` values.
 */
enum PfStatus pf_simulation_field(const struct PfSimulation *sim,
                                  enum PfField field,
                                  double *out,
                                  size_t len);

/**
 * Releases a simulation handle; null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void pf_simulation_free(struct PfSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROJFLOW_H */
