//! Brute-force pulse-train simulation.
//!
//! Each round pushes the circulating light through the element operators of
//! [`ElementSet`] as a joint path ⊗ polarization vector, reads the dark-port
//! state, and books filter and external losses by explicit projections. No
//! closed-form geometric sum is used anywhere in this module, which is what
//! makes it usable as a reference for [`crate::analytic`].

use num_complex::Complex64;

use crate::analytic::{ExperimentParams, Scheme};
use crate::error::{Error, Result};
use crate::interferometer::{ElementSet, ARM_1, PORT_A, PORT_C, PORT_D};
use crate::kernel::{ComplexAmp, JointOperator, JointVector, PolVector, ZERO};

/// Iteration stops once the circulating weight drops below this.
pub const CIRCULATION_FLOOR: f64 = 1e-300;
/// Hard cap for [`convergence_rounds`].
pub const MAX_CONVERGENCE_ROUNDS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: u64,
    /// Unnormalized dark-port polarization state of this round.
    pub dark_state: PolVector,
    pub p_d: f64,
    /// Weight removed by the H filters this round.
    pub loss_hp: f64,
    /// Weight removed in the external loop this round.
    pub loss_external: f64,
    /// H amplitude carried into the next round.
    pub bright_amp: ComplexAmp,
}

impl RoundRecord {
    pub fn loss(&self) -> f64 {
        self.loss_hp + self.loss_external
    }
}

/// The postselected mixture is kept as the list of per-round pure states.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseTrainResult {
    pub records: Vec<RoundRecord>,
    pub p_d_total: f64,
    pub gamma_hp: f64,
    pub gamma_external: f64,
    pub residual: f64,
    pub p_v_mixed: Option<f64>,
    pub rounds_simulated: u64,
}

impl PulseTrainResult {
    pub fn conservation_defect(&self) -> f64 {
        self.p_d_total + self.gamma_hp + self.gamma_external + self.residual - 1.0
    }
}

/// Round-by-round iterator over one pulse.
#[derive(Clone, Debug)]
pub struct PulseTrain {
    scheme: Scheme,
    forward: JointOperator,
    /// Return path from port c up to the arm-1 polarizer.
    to_filter: JointOperator,
    /// Arm-1 polarizer, then back out through BS1.
    from_filter: JointOperator,
    external: ComplexAmp,
    loss_l: f64,
    /// State entering the next round on ports (a, b); `None` before round 1.
    pending: Option<Pending>,
    round: u64,
    limit: Option<u64>,
    done: bool,
}

#[derive(Clone, Copy, Debug)]
enum Pending {
    /// Scheme I: H amplitude re-injected at port a.
    Injected(ComplexAmp),
    /// Scheme II: H amplitude leaving port c, still to be returned.
    Returning(ComplexAmp),
}

impl PulseTrain {
    /// `limit = None` keeps iterating until the light is gone.
    pub fn new(params: &ExperimentParams, limit: Option<u64>) -> Self {
        let el = ElementSet::new(params.theta_rad, params.beta_rad);
        let (external, loss_l) = match params.scheme {
            Scheme::SchemeI => (
                Complex64::cis(params.epsilon_rad) * (1.0 - params.loss_l).sqrt(),
                params.loss_l,
            ),
            _ => (ZERO, 0.0),
        };
        PulseTrain {
            scheme: params.scheme,
            forward: el.forward_pass(),
            to_filter: el.u1 * el.u2 * el.s2.adjoint(),
            from_filter: el.s1.adjoint() * el.hp_arm1,
            external,
            loss_l,
            pending: None,
            round: 0,
            limit: match params.scheme {
                Scheme::NoRecycle => Some(1),
                _ => limit,
            },
            done: false,
        }
    }

    /// Weight that would enter the next round.
    pub fn circulating(&self) -> f64 {
        match self.pending {
            None => 1.0,
            Some(Pending::Injected(a)) | Some(Pending::Returning(a)) => a.norm_sqr(),
        }
    }
}

impl Iterator for PulseTrain {
    type Item = RoundRecord;

    fn next(&mut self) -> Option<RoundRecord> {
        if self.done || self.limit.is_some_and(|n| self.round >= n) {
            return None;
        }
        if self.round > 0 && self.circulating() < CIRCULATION_FLOOR {
            self.done = true;
            return None;
        }

        let mut loss_hp = 0.0;
        let input = match self.pending {
            None => JointVector::product(PORT_A, PolVector::H),
            Some(Pending::Injected(a)) => JointVector::product(PORT_A, PolVector::H.scale(a)),
            Some(Pending::Returning(a)) => {
                let sent = JointVector::product(PORT_C, PolVector::H.scale(a));
                let at_filter = self.to_filter.apply(&sent);
                loss_hp += at_filter.on_path(ARM_1).v.norm_sqr();
                self.from_filter.apply(&at_filter)
            }
        };
        let out = self.forward.apply(&input);
        let dark = out.on_path(PORT_D);
        let bright = out.on_path(PORT_C);
        // horizontal polarizer on the bright port
        loss_hp += bright.v.norm_sqr();
        let kept = bright.h;

        let (next, loss_external) = match self.scheme {
            Scheme::SchemeI => (
                Pending::Injected(kept * self.external),
                self.loss_l * kept.norm_sqr(),
            ),
            // bright light is discarded; it shows up as the residual
            Scheme::NoRecycle => (Pending::Injected(kept), 0.0),
            Scheme::SchemeII => (Pending::Returning(kept), 0.0),
        };
        self.pending = Some(next);
        self.round += 1;

        let bright_amp = match next {
            Pending::Injected(a) | Pending::Returning(a) => a,
        };
        Some(RoundRecord {
            round: self.round,
            dark_state: dark,
            p_d: dark.norm_sq(),
            loss_hp,
            loss_external,
            bright_amp,
        })
    }
}

fn run(params: &ExperimentParams, n: u64) -> Result<PulseTrainResult> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("rounds_n", "rounds_n must be at least 1"));
    }
    let mut train = PulseTrain::new(params, Some(n));
    let records: Vec<RoundRecord> = train.by_ref().collect();
    let mut result = PulseTrainResult {
        p_d_total: records.iter().map(|r| r.p_d).sum(),
        gamma_hp: records.iter().map(|r| r.loss_hp).sum(),
        gamma_external: records.iter().map(|r| r.loss_external).sum(),
        residual: train.circulating(),
        rounds_simulated: records.len() as u64,
        records,
        p_v_mixed: None,
    };
    if result.residual < CIRCULATION_FLOOR {
        result.residual = 0.0;
    }
    result.p_v_mixed = mixed_state_pv(&result).ok();
    Ok(result)
}

/// External recycling loop, `n` rounds.
pub fn simulate_scheme1(params: &ExperimentParams, n: u64) -> Result<PulseTrainResult> {
    let mut p = *params;
    p.scheme = Scheme::SchemeI;
    run(&p, n)
}

/// Internal recycling loop, `n` rounds.
pub fn simulate_scheme2(params: &ExperimentParams, n: u64) -> Result<PulseTrainResult> {
    let mut p = *params;
    p.scheme = Scheme::SchemeII;
    run(&p, n)
}

/// Dispatch on `params.scheme`; the no-recycle measurement is one round.
pub fn simulate(params: &ExperimentParams, n: u64) -> Result<PulseTrainResult> {
    run(params, n)
}

/// Tr(|V⟩⟨V| ρ_d) over the mixture of per-round dark-port states.
pub fn mixed_state_pv(result: &PulseTrainResult) -> Result<f64> {
    if result.p_d_total <= 0.0 {
        return Err(Error::EmptyEnsemble);
    }
    let v_weight: f64 = result
        .records
        .iter()
        .map(|r| r.dark_state.v.norm_sqr())
        .sum();
    Ok(v_weight / result.p_d_total)
}

/// Smallest number of rounds after which the circulating weight is below `tol`.
pub fn convergence_rounds(params: &ExperimentParams, tol: f64) -> Result<u64> {
    params.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", "tolerance must be positive"));
    }
    let mut train = PulseTrain::new(params, Some(MAX_CONVERGENCE_ROUNDS));
    while let Some(rec) = train.next() {
        if train.circulating() < tol {
            return Ok(rec.round);
        }
    }
    Err(Error::NoConvergence {
        tol,
        rounds: train.round,
    })
}
