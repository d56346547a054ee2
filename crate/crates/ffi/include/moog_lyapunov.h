#ifndef MOOG_LYAPUNOV_H
#define MOOG_LYAPUNOV_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MoogStatus {
  MOOG_STATUS_OK = 0,
  MOOG_STATUS_NULL_POINTER = 1,
  MOOG_STATUS_INVALID_ARGUMENT = 2,
  MOOG_STATUS_DOMAIN = 3,
  MOOG_STATUS_NUMERICAL = 4,
  MOOG_STATUS_PANIC = 5,
} MoogStatus;

typedef enum MoogVerdict {
  MOOG_VERDICT_NEGATIVE_DEFINITE = 0,
  MOOG_VERDICT_NEGATIVE_SEMIDEFINITE = 1,
  MOOG_VERDICT_INDEFINITE = 2,
} MoogVerdict;

/*
 Matrix family codes accepted by [`moog_certify`].
 */
typedef enum MoogFamily {
  MOOG_FAMILY_AS = 0,
  MOOG_FAMILY_BS = 1,
  MOOG_FAMILY_QS_WORST_CASE = 2,
} MoogFamily;

/*
 Integrator codes accepted by [`moog_simulate`].
 */
typedef enum MoogMethod {
  MOOG_METHOD_RK4 = 0,
  MOOG_METHOD_DISCRETE_GRADIENT = 1,
} MoogMethod;

/*
 Opaque parameter handle.
 */
typedef struct MoogParams MoogParams;

/*
 Opaque trajectory handle.
 */
typedef struct MoogTrajectory MoogTrajectory;

typedef struct MoogComplex {
  double re;
  double im;
} MoogComplex;

/*
 Eigenvalue bounds of the `ω₀`-normalised symmetric part.
 */
typedef struct MoogCertificate {
  double omega0;
  double r;
  double min_eig;
  double max_eig;
  enum MoogVerdict verdict;
} MoogCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *moog_last_error(void);

/*
 Creates a parameter handle; release it with [`moog_params_free`].

 # Safety
 `out` must be NULL or point to writable storage for one pointer.
 */
enum MoogStatus moog_params_new(double omega0, double r, struct MoogParams **out);

/*
 # Safety
 `p` must be NULL or a handle from [`moog_params_new`] not yet freed.
 */
void moog_params_free(struct MoogParams *p);

/*
 Writes `α` and `d = max(1, α)`.

 # Safety
 `p` must be a live handle; `alpha` and `d` must be writable.
 */
enum MoogStatus moog_params_scaling(const struct MoogParams *p, double *alpha, double *d);

/*
 Nonlinear vector field at `x`.

 # Safety
 `p` must be a live handle; `x` readable and `out` writable for 4 doubles.
 */
enum MoogStatus moog_rhs(const struct MoogParams *p, const double *x, double *out);

/*
 Log-cosh Lyapunov function at the unscaled state `x`.

 # Safety
 `p` must be a live handle; `x` readable for 4 doubles; `out` writable.
 */
enum MoogStatus moog_lyapunov_value(const struct MoogParams *p, const double *x, double *out);

/*
 Time derivative of the log-cosh Lyapunov function along the flow.

 # Safety
 `p` must be a live handle; `x` readable for 4 doubles; `out` writable.
 */
enum MoogStatus moog_lyapunov_derivative(const struct MoogParams *p, const double *x, double *out);

/*
 Closed-form eigenvalues of the linearisation, sorted by argument.

 # Safety
 `p` must be a live handle; `out` writable for 4 elements.
 */
enum MoogStatus moog_eigvals_closed(const struct MoogParams *p, struct MoogComplex *out);

/*
 `-max Re λ` of the linearisation.

 # Safety
 `p` must be a live handle; `out` writable.
 */
enum MoogStatus moog_stability_margin(const struct MoogParams *p, double *out);

/*
 Negative-definiteness certificate for one matrix family.

 # Safety
 `p` must be a live handle; `out` writable.
 */
enum MoogStatus moog_certify(const struct MoogParams *p,
                             int32_t family,
                             double tol,
                             struct MoogCertificate *out);

/*
 Integrates `n_steps` steps of size `dt`; release the result with
 [`moog_trajectory_free`]. A non-positive `newton_tol` selects the default.

 # Safety
 `p` must be a live handle; `x0` readable for 4 doubles; `out` writable.
 */
enum MoogStatus moog_simulate(const struct MoogParams *p,
                              const double *x0,
                              int32_t method,
                              double dt,
                              size_t n_steps,
                              double newton_tol,
                              struct MoogTrajectory **out);

/*
 Number of samples (`n_steps + 1`), or 0 for a NULL handle.

 # Safety
 `t` must be NULL or a live trajectory handle.
 */
size_t moog_trajectory_len(const struct MoogTrajectory *t);

/*
 Reads sample `i`. Any of the output pointers may be NULL to skip it.

 # Safety
 `t` must be a live handle; non-NULL outputs must be writable (`x` for 4
 doubles).
 */
enum MoogStatus moog_trajectory_sample(const struct MoogTrajectory *t,
                                       size_t i,
                                       double *time,
                                       double *x,
                                       double *v,
                                       double *vdot);

/*
 Largest per-step increase of `V` along the trajectory.

 # Safety
 `t` must be a live handle; `out` writable.
 */
enum MoogStatus moog_trajectory_max_v_increase(const struct MoogTrajectory *t, double *out);

/*
 # Safety
 `t` must be NULL or a handle from [`moog_simulate`] not yet freed.
 */
void moog_trajectory_free(struct MoogTrajectory *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOOG_LYAPUNOV_H */
