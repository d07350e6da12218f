#ifndef RPSM_H
#define RPSM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  RPSM_SCHEME_NONE = 0,
  RPSM_SCHEME_I = 1,
  RPSM_SCHEME_II = 2,
} RpsmScheme;

typedef enum {
  RPSM_STATUS_OK = 0,
  RPSM_STATUS_NULL_POINTER = 1,
  RPSM_STATUS_INVALID_PARAMETER = 2,
  RPSM_STATUS_DEGENERATE_DARK_PORT = 3,
  RPSM_STATUS_EMPTY_SAMPLE = 4,
  RPSM_STATUS_NO_CONVERGENCE = 5,
  RPSM_STATUS_OUT_OF_RANGE = 6,
  RPSM_STATUS_INTERNAL = 7,
  RPSM_STATUS_PANIC = 8,
} RpsmStatus;

/**
 * Opaque parameter set.
 */
typedef struct RpsmParams RpsmParams;

/**
 * Opaque result of a round-by-round simulation.
 */
typedef struct RpsmPulseTrain RpsmPulseTrain;

typedef struct {
  double p_d1;
  double p_c1;
  double gamma_1;
  double p_d;
  double gamma;
  double gamma_external;
  double residual;
  double p_v;
  double theta_tilde;
  double eta;
  double aux;
  /**
   * NaN unless finite-n scheme II.
   */
  double kappa_n;
  double r_tilde;
  double delta_theta_tilde;
  double sensitivity_canonical;
  double sensitivity_paper_convention;
} RpsmSummary;

/**
 * One round of a pulse train. The dark-port state is (h, v) with separate
 * real and imaginary parts.
 */
typedef struct {
  uint64_t round;
  double dark_h_re;
  double dark_h_im;
  double dark_v_re;
  double dark_v_im;
  double p_d;
  double loss_hp;
  double loss_external;
} RpsmRound;

typedef struct {
  uint64_t rounds_simulated;
  double p_d_total;
  double gamma_hp;
  double gamma_external;
  double residual;
  /**
   * NaN when nothing reached the dark port.
   */
  double p_v_mixed;
} RpsmPulseTrainTotals;

typedef struct {
  double mean_theta_tilde;
  double empirical_std;
  double predicted_std;
  double rel_deviation;
  double theta_tilde_analytic;
  uint64_t trials;
  uint64_t trials_used;
} RpsmMcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *rpsm_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *rpsm_version(void);

/**
 * New parameter set with L = 0, ε = 0, N = 10⁶ and infinitely many rounds.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
RpsmStatus rpsm_params_new(RpsmScheme scheme, double theta_rad, double beta_rad, RpsmParams **out);

/**
 * # Safety
 * `params` must be null or a handle from [`rpsm_params_new`] not yet freed.
 */
void rpsm_params_free(RpsmParams *params);

/**
 * External-loop loss L in [0, 1). The handle is unchanged on error.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
RpsmStatus rpsm_params_set_loss(RpsmParams *params, double loss);

/**
 * # Safety
 * `params` must be null or a live handle.
 */
RpsmStatus rpsm_params_set_epsilon(RpsmParams *params, double epsilon_rad);

/**
 * # Safety
 * `params` must be null or a live handle.
 */
RpsmStatus rpsm_params_set_photons(RpsmParams *params, double photons);

/**
 * `rounds = 0` means infinitely many.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
RpsmStatus rpsm_params_set_rounds(RpsmParams *params, uint64_t rounds);

/**
 * # Safety
 * `params` must be null or a live handle; `out` null or writable.
 */
RpsmStatus rpsm_summary(const RpsmParams *params, RpsmSummary *out);

/**
 * Simulates `rounds` passes (fewer if the light runs out).
 *
 * # Safety
 * `params` must be null or a live handle; `out` null or writable.
 */
RpsmStatus rpsm_pulse_train_simulate(const RpsmParams *params,
                                     uint64_t rounds,
                                     RpsmPulseTrain **out);

/**
 * Number of recorded rounds; 0 for a null handle.
 *
 * # Safety
 * `train` must be null or a live handle.
 */
uint64_t rpsm_pulse_train_len(const RpsmPulseTrain *train);

/**
 * Round `index`, zero-based.
 *
 * # Safety
 * `train` must be null or a live handle; `out` null or writable.
 */
RpsmStatus rpsm_pulse_train_round(const RpsmPulseTrain *train, uint64_t index, RpsmRound *out);

/**
 * # Safety
 * `train` must be null or a live handle; `out` null or writable.
 */
RpsmStatus rpsm_pulse_train_totals(const RpsmPulseTrain *train, RpsmPulseTrainTotals *out);

/**
 * # Safety
 * `train` must be null or a handle from [`rpsm_pulse_train_simulate`] not
 * yet freed.
 */
void rpsm_pulse_train_free(RpsmPulseTrain *train);

/**
 * Photon-counting Monte Carlo; deterministic for a given `seed`.
 *
 * # Safety
 * `params` must be null or a live handle; `out` null or writable.
 */
RpsmStatus rpsm_mc_run(const RpsmParams *params,
                       uint64_t trials,
                       uint64_t seed,
                       RpsmMcEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RPSM_H */
