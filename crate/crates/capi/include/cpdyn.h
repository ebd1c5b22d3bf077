/* C interface for the cpdyn projective-space dynamics library. */

#ifndef CPDYN_H
#define CPDYN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define CPDYN_OK 0

/**
 * A pointer argument was null or an argument was out of range.
 */
#define CPDYN_ERR_ARGUMENT 1

/**
 * The inputs describe an invalid model (dimensions, parse errors, ...).
 */
#define CPDYN_ERR_CONFIG 2

/**
 * The integrator failed (step underflow, singular damping solve, ...).
 */
#define CPDYN_ERR_SOLVER 3

/**
 * An internal invariant failed.
 */
#define CPDYN_ERR_INTERNAL 100

/**
 * Opaque Hermitian operator handle.
 */
typedef struct CpdynHamiltonian CpdynHamiltonian;

/**
 * Opaque sampled-trajectory handle. Populations are stored row-major:
 * sample index varies slowest, level index fastest.
 */
typedef struct CpdynTrajectory CpdynTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The most recent error message on this thread; an empty string if no
 * error has occurred. The pointer stays valid until the next failing call
 * on the same thread.
 */
const char *cpdyn_last_error_message(void);

/**
 * Builds the five-coefficient four-level operator
 * `c1 σz⊗I + c2 σx⊗I + c3 σy⊗I + c4 σy⊗σy + c5 σx⊗σy`.
 */
int32_t cpdyn_hamiltonian_two_qubit(double c1,
                                    double c2,
                                    double c3,
                                    double c4,
                                    double c5,
                                    struct CpdynHamiltonian **out);

/**
 * Builds the bundled seven-site exciton operator (wavenumber units).
 */
int32_t cpdyn_hamiltonian_fmo(struct CpdynHamiltonian **out);

/**
 * Loads an operator from a plain-text matrix file (optional
 * `# unit: cm-1` header).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
int32_t cpdyn_hamiltonian_from_file(const char *path, struct CpdynHamiltonian **out);

/**
 * Dimension of the operator, or 0 for a null handle.
 */
size_t cpdyn_hamiltonian_dim(const struct CpdynHamiltonian *h);

/**
 * Releases an operator handle; a null pointer is ignored.
 */
void cpdyn_hamiltonian_free(struct CpdynHamiltonian *h);

/**
 * Integrates the isolated or damped flow and samples observables.
 *
 * `amps_re`/`amps_im` hold the `dim` initial amplitudes (normalized
 * internally). `gammas` is either null (isolated run), one value
 * (broadcast), or `dim - 1` per-coordinate damping constants; the chart
 * anchor is chosen automatically. Sampling runs from 0 to `t_final` every
 * `sample_dt`, with default integrator settings.
 *
 * # Safety
 * The array arguments must point to buffers of the stated lengths.
 */
int32_t cpdyn_integrate(const struct CpdynHamiltonian *h,
                        const double *amps_re,
                        const double *amps_im,
                        size_t dim,
                        const double *gammas,
                        size_t gammas_len,
                        double t_final,
                        double sample_dt,
                        struct CpdynTrajectory **out);

/**
 * Number of samples, or 0 for a null handle.
 */
size_t cpdyn_trajectory_len(const struct CpdynTrajectory *t);

/**
 * System dimension, or 0 for a null handle.
 */
size_t cpdyn_trajectory_dim(const struct CpdynTrajectory *t);

/**
 * Sample times (length `len`); valid until the handle is freed.
 */
const double *cpdyn_trajectory_times(const struct CpdynTrajectory *t);

/**
 * Populations, row-major `len × dim` (sample-major); valid until the
 * handle is freed.
 */
const double *cpdyn_trajectory_populations(const struct CpdynTrajectory *t);

/**
 * System energy per sample (length `len`).
 */
const double *cpdyn_trajectory_energy(const struct CpdynTrajectory *t);

/**
 * Population-imbalance channel `z` (length `len`); null unless the system
 * has four levels.
 */
const double *cpdyn_trajectory_z(const struct CpdynTrajectory *t);

/**
 * Concurrence channel (length `len`); null unless the system has four
 * levels.
 */
const double *cpdyn_trajectory_concurrence(const struct CpdynTrajectory *t);

/**
 * Releases a trajectory handle; a null pointer is ignored.
 */
void cpdyn_trajectory_free(struct CpdynTrajectory *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPDYN_H */
