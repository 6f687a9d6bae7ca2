#ifndef INVASION_H
#define INVASION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InvBoundary {
  INV_BOUNDARY_DIRICHLET = 0,
  INV_BOUNDARY_NEUMANN = 1,
} InvBoundary;

typedef enum InvInit {
  INV_INIT_GAUSSIAN = 0,
  INV_INIT_DIRAC = 1,
} InvInit;

typedef enum InvMethod {
  INV_METHOD_FAST = 0,
  INV_METHOD_BRUTE_FORCE = 1,
} InvMethod;

/**
 * Status codes. Values 0 to 4 coincide with the command-line exit codes.
 */
typedef enum InvStatus {
  INV_STATUS_OK = 0,
  INV_STATUS_ERROR = 1,
  INV_STATUS_CONFIG = 2,
  INV_STATUS_BLOW_UP = 3,
  INV_STATUS_CHECK_FAILED = 4,
  INV_STATUS_DOMAIN = 5,
  INV_STATUS_NULL_POINTER = 6,
  INV_STATUS_BUFFER_TOO_SMALL = 7,
  INV_STATUS_INVALID_ARGUMENT = 8,
  INV_STATUS_PANIC = 9,
} InvStatus;

/**
 * Opaque simulation handle.
 */
typedef struct InvSimulation InvSimulation;

/**
 * Scalar parameters; output times are not part of the C interface since
 * the caller drives the stepping.
 */
typedef struct InvParams {
  double r;
  double k;
  double lambda2;
  double dt;
  double dx;
  double dtheta;
  double x_max;
  double theta_max;
  double theta_min;
  double t_end;
  double front_threshold;
  double diagnostic_dt;
  enum InvBoundary right_boundary;
} InvParams;

/**
 * Front diagnostics of the current state.
 */
typedef struct InvFront {
  double x_num;
  /**
   * NaN when the local mass at the front vanishes.
   */
  double theta_bar;
  /**
   * NaN when the density never crosses 1/2.
   */
  double x_half;
  /**
   * 0 when the density vanishes identically.
   */
  int32_t defined;
} InvFront;

typedef struct InvFit {
  double prefactor;
  double exponent;
  double r_squared;
  size_t n_points;
} InvFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *inv_last_error(void);

/**
 * NUL-terminated crate version; static storage.
 */
const char *inv_version(void);

/**
 * Writes the default parameter set.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `InvParams`.
 */
enum InvStatus inv_params_default(struct InvParams *out);

/**
 * Writes a named preset (`paper`, `dirac`, `low-r`, `high-lambda`) and its
 * initial data.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` and `init` must be null or
 * writable.
 */
enum InvStatus inv_params_preset(const char *name, struct InvParams *out, enum InvInit *init);

/**
 * Parses config-file text on top of the defaults.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` and `init` must be null or
 * writable.
 */
enum InvStatus inv_params_from_config(const char *text, struct InvParams *out, enum InvInit *init);

/**
 * Creates a simulation at `t = 0`. Fails on invalid parameters, including
 * a time step above the explicit stability bound.
 *
 * # Safety
 * `params` must point to a valid `InvParams`; `out` must be writable.
 */
enum InvStatus inv_simulation_new(const struct InvParams *params,
                                  enum InvInit init,
                                  enum InvMethod method,
                                  struct InvSimulation **out);

/**
 * Releases a simulation. Null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle from [`inv_simulation_new`] not yet freed.
 */
void inv_simulation_free(struct InvSimulation *sim);

/**
 * Advances by `nsteps` Euler steps. On blow-up the state is left at the
 * last finite step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum InvStatus inv_simulation_step(struct InvSimulation *sim, uint64_t nsteps);

/**
 * Current time, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double inv_simulation_time(const struct InvSimulation *sim);

/**
 * Number of steps taken so far.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uint64_t inv_simulation_step_index(const struct InvSimulation *sim);

/**
 * Mesh sizes in `x` and `theta`.
 *
 * # Safety
 * `sim` must be a live handle; `nx` and `ntheta` writable.
 */
enum InvStatus inv_simulation_dims(const struct InvSimulation *sim, size_t *nx, size_t *ntheta);

/**
 * Copies the density, `nx * ntheta` values, row-major in `x`.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must hold `len` doubles.
 */
enum InvStatus inv_simulation_copy_field(const struct InvSimulation *sim, double *buf, size_t len);

/**
 * Copies the population size, `nx` values.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must hold `len` doubles.
 */
enum InvStatus inv_simulation_copy_rho(const struct InvSimulation *sim, double *buf, size_t len);

/**
 * Front position at `threshold`, mean trait there, and half-density front.
 *
 * # Safety
 * `sim` must be a live handle; `out` writable.
 */
enum InvStatus inv_simulation_front(const struct InvSimulation *sim,
                                    double threshold,
                                    struct InvFront *out);

/**
 * `4 sqrt(lambda / 3)`.
 */
double inv_critical_y(double lambda);

/**
 * Mean-trait profile `a(y)` and amplitude profile `b(y)`.
 *
 * # Safety
 * `a` and `b` must be writable.
 */
enum InvStatus inv_profiles(double y, double lambda2, double *a, double *b);

/**
 * Corrector series `u_1(y, eta)` and the number of terms summed.
 *
 * # Safety
 * `value` and `terms` must be writable.
 */
enum InvStatus inv_u1_series(double y,
                             double eta,
                             double lambda2,
                             size_t kmax,
                             double tol,
                             double *value,
                             size_t *terms);

/**
 * Leading-order predicted density; `one_third` selects the alternative
 * prefactor exponent.
 *
 * # Safety
 * `out` must be writable.
 */
enum InvStatus inv_conjecture_density(double t,
                                      double x,
                                      double theta,
                                      double lambda2,
                                      bool one_third,
                                      double *out);

/**
 * Least-squares fit of `y = C t^p` over `t` in `[t0, t1]`.
 *
 * # Safety
 * `ts` and `ys` must hold `n` doubles; `out` writable.
 */
enum InvStatus inv_loglog_fit(const double *ts,
                              const double *ys,
                              size_t n,
                              double t0,
                              double t1,
                              struct InvFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INVASION_H */
