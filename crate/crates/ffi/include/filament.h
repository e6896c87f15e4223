#ifndef FILAMENT_H
#define FILAMENT_H

#include <stddef.h>
#include <stdint.h>

typedef enum FilamentProfileMode {
  FILAMENT_PROFILE_MODE_PAIR = 0,
  FILAMENT_PROFILE_MODE_POLYGONAL = 1,
} FilamentProfileMode;

typedef enum FilamentStatus {
  FILAMENT_STATUS_OK = 0,
  FILAMENT_STATUS_NULL_POINTER = 1,
  FILAMENT_STATUS_INVALID_ARGUMENT = 2,
  FILAMENT_STATUS_NO_CONVERGENCE = 3,
  FILAMENT_STATUS_DOMAIN = 4,
  FILAMENT_STATUS_IO = 5,
  FILAMENT_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A run finished but an explicit check failed or it aborted early.
   */
  FILAMENT_STATUS_CHECK_FAILED = 7,
  FILAMENT_STATUS_PANIC = 8,
} FilamentStatus;

/**
 * Converged self-similar profile.
 */
typedef struct FilamentProfile FilamentProfile;

/**
 * Point-vortex trajectory, one state per step.
 */
typedef struct FilamentPvTrajectory FilamentPvTrajectory;

typedef struct FilamentProfileInfo {
  double alpha;
  size_t nodes;
  size_t iterations;
  double final_update;
  double tail_bound;
  double max_ratio;
} FilamentProfileInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the last failed call on this thread into `buf`
 * (NUL-terminated, truncated to `cap`) and returns its full length plus one.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t filament_last_error(char *buf, size_t cap);

/**
 * Picard solve of the profile on a uniform grid of `m` nodes on [0, x_max].
 * `omega` is ignored in pair mode.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum FilamentStatus filament_profile_solve(enum FilamentProfileMode mode,
                                           double alpha,
                                           double omega,
                                           double x_max,
                                           size_t m,
                                           double tol,
                                           size_t max_iter,
                                           struct FilamentProfile **out);

/**
 * Reads a profile.json.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for one write.
 */
enum FilamentStatus filament_profile_load(const char *path, struct FilamentProfile **out);

/**
 * # Safety
 * `profile` must come from this library; `path` NUL-terminated.
 */
enum FilamentStatus filament_profile_save(const struct FilamentProfile *profile, const char *path);

/**
 * # Safety
 * `profile` must be null or come from this library, and not be used again.
 */
void filament_profile_free(struct FilamentProfile *profile);

/**
 * # Safety
 * `profile` from this library; `info` valid for one write.
 */
enum FilamentStatus filament_profile_info(const struct FilamentProfile *profile,
                                          struct FilamentProfileInfo *info);

/**
 * Copies the nodes x_j and u(x_j) into three arrays of `len` ≥ node count.
 *
 * # Safety
 * Each pointer must be valid for `len` doubles.
 */
enum FilamentStatus filament_profile_samples(const struct FilamentProfile *profile,
                                             double *x,
                                             double *u_re,
                                             double *u_im,
                                             size_t len);

/**
 * u at |x| (even extension), interpolated between nodes.
 *
 * # Safety
 * `re`, `im` valid for one write.
 */
enum FilamentStatus filament_profile_eval(const struct FilamentProfile *profile,
                                          double x,
                                          double *re,
                                          double *im);

/**
 * H(t, σ) = √t u(σ/√t) for t > 0.
 *
 * # Safety
 * `re`, `im` valid for one write.
 */
enum FilamentStatus filament_profile_eval_h(const struct FilamentProfile *profile,
                                            double t,
                                            double sigma,
                                            double *re,
                                            double *im);

/**
 * RK4 integration of a unit-circulation polygon of radius `rho` (with a
 * central vortex of circulation `gamma0` when `with_center` is nonzero),
 * or of the anti-parallel pair at distance `rho` when `n` is 0.
 *
 * # Safety
 * `out` valid for one write.
 */
enum FilamentStatus filament_pv_integrate(size_t n,
                                          double rho,
                                          int32_t with_center,
                                          double gamma0,
                                          double t_final,
                                          double dt,
                                          struct FilamentPvTrajectory **out);

/**
 * # Safety
 * `traj` from this library; `frames`, `vortices` valid for one write.
 */
enum FilamentStatus filament_pv_shape(const struct FilamentPvTrajectory *traj,
                                      size_t *frames,
                                      size_t *vortices);

/**
 * Time and positions of frame `k`.
 *
 * # Safety
 * `t` valid for one write; `re`, `im` for `len` doubles.
 */
enum FilamentStatus filament_pv_frame(const struct FilamentPvTrajectory *traj,
                                      size_t k,
                                      double *t,
                                      double *re,
                                      double *im,
                                      size_t len);

/**
 * # Safety
 * `traj` must be null or come from this library, and not be used again.
 */
void filament_pv_free(struct FilamentPvTrajectory *traj);

/**
 * Runs a pipeline stage ("profile", "pv", "simulate", "fixedpoint" or
 * "verify") on a JSON run configuration, writing into its output_dir.
 * Returns `CheckFailed` when verification finds explicit failures or a
 * simulation aborts.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum FilamentStatus filament_run(const char *command, const char *config_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FILAMENT_H */
