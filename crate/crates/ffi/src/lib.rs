//! C ABI over `rpsm-core`.
//!
//! Every fallible call returns an [`RpsmStatus`]; on failure the message is
//! available from [`rpsm_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rpsm_core::analytic::{self, ExperimentParams, RecyclingSummary, Rounds, Scheme};
use rpsm_core::mc::{self, McConfig};
use rpsm_core::oracle::{self, PulseTrainResult};
use rpsm_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpsmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    DegenerateDarkPort = 3,
    EmptySample = 4,
    NoConvergence = 5,
    OutOfRange = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RpsmScheme {
    None = 0,
    I = 1,
    II = 2,
}

impl From<RpsmScheme> for Scheme {
    fn from(s: RpsmScheme) -> Self {
        match s {
            RpsmScheme::None => Scheme::NoRecycle,
            RpsmScheme::I => Scheme::SchemeI,
            RpsmScheme::II => Scheme::SchemeII,
        }
    }
}

/// Opaque parameter set.
pub struct RpsmParams {
    inner: ExperimentParams,
}

/// Opaque result of a round-by-round simulation.
pub struct RpsmPulseTrain {
    inner: PulseTrainResult,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RpsmSummary {
    pub p_d1: f64,
    pub p_c1: f64,
    pub gamma_1: f64,
    pub p_d: f64,
    pub gamma: f64,
    pub gamma_external: f64,
    pub residual: f64,
    pub p_v: f64,
    pub theta_tilde: f64,
    pub eta: f64,
    pub aux: f64,
    /// NaN unless finite-n scheme II.
    pub kappa_n: f64,
    pub r_tilde: f64,
    pub delta_theta_tilde: f64,
    pub sensitivity_canonical: f64,
    pub sensitivity_paper_convention: f64,
}

impl From<&RecyclingSummary> for RpsmSummary {
    fn from(s: &RecyclingSummary) -> Self {
        RpsmSummary {
            p_d1: s.p_d1,
            p_c1: s.p_c1,
            gamma_1: s.gamma_1,
            p_d: s.p_d,
            gamma: s.gamma,
            gamma_external: s.gamma_external,
            residual: s.residual,
            p_v: s.p_v,
            theta_tilde: s.theta_tilde,
            eta: s.eta,
            aux: s.aux,
            kappa_n: s.kappa_n.unwrap_or(f64::NAN),
            r_tilde: s.snr_enhancement,
            delta_theta_tilde: s.delta_theta_tilde,
            sensitivity_canonical: s.sensitivity_canonical,
            sensitivity_paper_convention: s.sensitivity_paper_convention,
        }
    }
}

/// One round of a pulse train. The dark-port state is (h, v) with separate
/// real and imaginary parts.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RpsmRound {
    pub round: u64,
    pub dark_h_re: f64,
    pub dark_h_im: f64,
    pub dark_v_re: f64,
    pub dark_v_im: f64,
    pub p_d: f64,
    pub loss_hp: f64,
    pub loss_external: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RpsmPulseTrainTotals {
    pub rounds_simulated: u64,
    pub p_d_total: f64,
    pub gamma_hp: f64,
    pub gamma_external: f64,
    pub residual: f64,
    /// NaN when nothing reached the dark port.
    pub p_v_mixed: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RpsmMcEstimate {
    pub mean_theta_tilde: f64,
    pub empirical_std: f64,
    pub predicted_std: f64,
    pub rel_deviation: f64,
    pub theta_tilde_analytic: f64,
    pub trials: u64,
    pub trials_used: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RpsmStatus {
    match e {
        Error::InvalidParameter { .. } => RpsmStatus::InvalidParameter,
        Error::DegenerateDarkPort(_) => RpsmStatus::DegenerateDarkPort,
        Error::EmptyEnsemble | Error::EmptySample => RpsmStatus::EmptySample,
        Error::NoConvergence { .. } => RpsmStatus::NoConvergence,
        Error::Inconsistent(_) => RpsmStatus::Internal,
    }
}

fn fail(status: RpsmStatus, msg: &str) -> RpsmStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, clearing the last error on success and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (RpsmStatus, String)>) -> RpsmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            RpsmStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, &msg),
        Err(_) => fail(RpsmStatus::Panic, "internal panic"),
    }
}

fn core_err(e: Error) -> (RpsmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RpsmStatus, String) {
    (RpsmStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn rpsm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn rpsm_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}

/// New parameter set with L = 0, ε = 0, N = 10⁶ and infinitely many rounds.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn rpsm_params_new(
    scheme: RpsmScheme,
    theta_rad: f64,
    beta_rad: f64,
    out: *mut *mut RpsmParams,
) -> RpsmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ExperimentParams::new(scheme.into(), theta_rad, beta_rad);
        inner.validate().map_err(core_err)?;
        *out = Box::into_raw(Box::new(RpsmParams { inner }));
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle from [`rpsm_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rpsm_params_free(params: *mut RpsmParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

unsafe fn update(params: *mut RpsmParams, f: impl FnOnce(&mut ExperimentParams)) -> RpsmStatus {
    guard(|| {
        let p = params.as_mut().ok_or_else(|| null("params"))?;
        let mut next = p.inner;
        f(&mut next);
        next.validate().map_err(core_err)?;
        p.inner = next;
        Ok(())
    })
}

/// External-loop loss L in [0, 1). The handle is unchanged on error.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpsm_params_set_loss(params: *mut RpsmParams, loss: f64) -> RpsmStatus {
    update(params, |p| p.loss_l = loss)
}

/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpsm_params_set_epsilon(
    params: *mut RpsmParams,
    epsilon_rad: f64,
) -> RpsmStatus {
    update(params, |p| p.epsilon_rad = epsilon_rad)
}

/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpsm_params_set_photons(
    params: *mut RpsmParams,
    photons: f64,
) -> RpsmStatus {
    update(params, |p| p.photons_n = photons)
}

/// `rounds = 0` means infinitely many.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpsm_params_set_rounds(
    params: *mut RpsmParams,
    rounds: u64,
) -> RpsmStatus {
    update(params, |p| {
        p.rounds = if rounds == 0 {
            Rounds::Infinite
        } else {
            Rounds::Finite(rounds)
        }
    })
}

/// # Safety
/// `params` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rpsm_summary(
    params: *const RpsmParams,
    out: *mut RpsmSummary,
) -> RpsmStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = analytic::summarize(&p.inner).map_err(core_err)?;
        *out = RpsmSummary::from(&s);
        Ok(())
    })
}

/// Simulates `rounds` passes (fewer if the light runs out).
///
/// # Safety
/// `params` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rpsm_pulse_train_simulate(
    params: *const RpsmParams,
    rounds: u64,
    out: *mut *mut RpsmPulseTrain,
) -> RpsmStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = oracle::simulate(&p.inner, rounds).map_err(core_err)?;
        *out = Box::into_raw(Box::new(RpsmPulseTrain { inner }));
        Ok(())
    })
}

/// Number of recorded rounds; 0 for a null handle.
///
/// # Safety
/// `train` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rpsm_pulse_train_len(train: *const RpsmPulseTrain) -> u64 {
    train.as_ref().map_or(0, |t| t.inner.records.len() as u64)
}

/// Round `index`, zero-based.
///
/// # Safety
/// `train` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rpsm_pulse_train_round(
    train: *const RpsmPulseTrain,
    index: u64,
    out: *mut RpsmRound,
) -> RpsmStatus {
    guard(|| {
        let t = train.as_ref().ok_or_else(|| null("train"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = usize::try_from(index)
            .ok()
            .and_then(|i| t.inner.records.get(i))
            .ok_or_else(|| {
                (
                    RpsmStatus::OutOfRange,
                    format!(
                        "round index {index} out of range (len {})",
                        t.inner.records.len()
                    ),
                )
            })?;
        *out = RpsmRound {
            round: r.round,
            dark_h_re: r.dark_state.h.re,
            dark_h_im: r.dark_state.h.im,
            dark_v_re: r.dark_state.v.re,
            dark_v_im: r.dark_state.v.im,
            p_d: r.p_d,
            loss_hp: r.loss_hp,
            loss_external: r.loss_external,
        };
        Ok(())
    })
}

/// # Safety
/// `train` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rpsm_pulse_train_totals(
    train: *const RpsmPulseTrain,
    out: *mut RpsmPulseTrainTotals,
) -> RpsmStatus {
    guard(|| {
        let t = &train.as_ref().ok_or_else(|| null("train"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = RpsmPulseTrainTotals {
            rounds_simulated: t.rounds_simulated,
            p_d_total: t.p_d_total,
            gamma_hp: t.gamma_hp,
            gamma_external: t.gamma_external,
            residual: t.residual,
            p_v_mixed: t.p_v_mixed.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// # Safety
/// `train` must be null or a handle from [`rpsm_pulse_train_simulate`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn rpsm_pulse_train_free(train: *mut RpsmPulseTrain) {
    if !train.is_null() {
        drop(Box::from_raw(train));
    }
}

/// Photon-counting Monte Carlo; deterministic for a given `seed`.
///
/// # Safety
/// `params` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rpsm_mc_run(
    params: *const RpsmParams,
    trials: u64,
    seed: u64,
    out: *mut RpsmMcEstimate,
) -> RpsmStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let trials = usize::try_from(trials)
            .map_err(|_| (RpsmStatus::InvalidParameter, "trials too large".to_string()))?;
        let e = mc::run_trials(&McConfig {
            params: p.inner,
            trials,
            master_seed: seed,
        })
        .map_err(core_err)?;
        *out = RpsmMcEstimate {
            mean_theta_tilde: e.mean_theta_tilde,
            empirical_std: e.empirical_std,
            predicted_std: e.predicted_std,
            rel_deviation: e.rel_deviation,
            theta_tilde_analytic: e.theta_tilde_analytic,
            trials: e.trials as u64,
            trials_used: e.trials_used as u64,
        };
        Ok(())
    })
}
