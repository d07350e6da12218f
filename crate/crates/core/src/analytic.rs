//! Closed-form results for postselected measurement without recycling and
//! with the external (scheme I) and internal (scheme II) pulse-recycling
//! loops, at finite and infinite recycle count.
//!
//! Conventions used throughout:
//!
//! * `snr_enhancement` is R̃ = √(P_d·η), the SNR relative to a conventional
//!   measurement whose SNR is 2θ√N. Without recycling R̃ = 1/2.
//! * `sensitivity_canonical` = δθ̃/θ̃ = 1 / (R̃ · 2θ√N).
//! * `sensitivity_paper_convention` evaluates the scheme-specific closed
//!   forms √(1−y)/(θ√N) (scheme I), 1/(θ√((1+x)N)) (scheme II) and 1/(θ√N)
//!   (no recycling). The two agree identically.
//! * Probabilities that are differences of nearly equal numbers
//!   (1 − cos θ cos β and friends) are evaluated in half-angle form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominators below this are treated as a dark port that never fires.
pub const DEGENERACY_FLOOR: f64 = 1e-15;
/// Geometric powers below this are flushed to zero.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;
/// Above this exponent powers are taken in log space.
const LOG_SPACE_EXPONENT: u64 = 1_000;
/// Allowed overshoot of P_V above 1 before it counts as an internal error.
const PROBABILITY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[serde(rename = "none")]
    NoRecycle,
    #[serde(rename = "scheme1")]
    SchemeI,
    #[serde(rename = "scheme2")]
    SchemeII,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::NoRecycle => "none",
            Scheme::SchemeI => "scheme1",
            Scheme::SchemeII => "scheme2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "norecycle" | "no-recycle" | "psm" => Ok(Scheme::NoRecycle),
            "scheme1" | "i" | "1" => Ok(Scheme::SchemeI),
            "scheme2" | "ii" | "2" => Ok(Scheme::SchemeII),
            other => Err(Error::invalid(
                "scheme",
                format!("unknown scheme {other:?} (expected none, scheme1 or scheme2)"),
            )),
        }
    }
}

/// Number of passes a pulse makes through the interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounds {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Rounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rounds::Finite(n) => write!(f, "{n}"),
            Rounds::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Rounds {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinite") {
            return Ok(Rounds::Infinite);
        }
        // accept 1e5 style as well as plain integers
        let n = s
            .parse::<u64>()
            .ok()
            .or_else(|| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.fract() == 0.0 && *x >= 0.0 && *x < u64::MAX as f64)
                    .map(|x| x as u64)
            })
            .ok_or_else(|| Error::invalid("rounds_n", format!("cannot parse {s:?}")))?;
        Ok(Rounds::Finite(n))
    }
}

/// Full configuration of one measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentParams {
    pub theta_rad: f64,
    pub beta_rad: f64,
    /// External-loop loss ratio L (scheme I only).
    pub loss_l: f64,
    /// Extra phase picked up in the external loop (scheme I only).
    pub epsilon_rad: f64,
    /// Mean photon number per pulse.
    pub photons_n: f64,
    pub rounds: Rounds,
    pub scheme: Scheme,
}

impl ExperimentParams {
    pub const DEFAULT_PHOTONS: f64 = 1e6;

    pub fn new(scheme: Scheme, theta_rad: f64, beta_rad: f64) -> Self {
        ExperimentParams {
            theta_rad,
            beta_rad,
            loss_l: 0.0,
            epsilon_rad: 0.0,
            photons_n: Self::DEFAULT_PHOTONS,
            rounds: Rounds::Infinite,
            scheme,
        }
    }

    pub fn with_loss(mut self, loss_l: f64) -> Self {
        self.loss_l = loss_l;
        self
    }

    pub fn with_epsilon(mut self, epsilon_rad: f64) -> Self {
        self.epsilon_rad = epsilon_rad;
        self
    }

    pub fn with_photons(mut self, photons_n: f64) -> Self {
        self.photons_n = photons_n;
        self
    }

    pub fn with_rounds(mut self, rounds: Rounds) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_rad.is_finite() {
            return Err(Error::invalid("theta_rad", "must be finite"));
        }
        if !self.beta_rad.is_finite() {
            return Err(Error::invalid("beta_rad", "must be finite"));
        }
        if !self.epsilon_rad.is_finite() {
            return Err(Error::invalid("epsilon_rad", "must be finite"));
        }
        if !(0.0..1.0).contains(&self.loss_l) {
            return Err(Error::invalid("loss_L", "loss_L must be in [0,1)"));
        }
        if !(self.photons_n.is_finite() && self.photons_n > 0.0) {
            return Err(Error::invalid(
                "photons_N",
                "photons_N must be positive and finite",
            ));
        }
        if self.rounds == Rounds::Finite(0) {
            return Err(Error::invalid("rounds_n", "rounds_n must be at least 1"));
        }
        Ok(())
    }
}

/// Faraday crystal: θ = V·B·l.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagnetometerParams {
    /// rad·T⁻¹·m⁻¹
    pub verdet: f64,
    /// m
    pub length: f64,
    /// T
    pub field: f64,
}

pub fn angle_from_field(m: &MagnetometerParams) -> f64 {
    m.verdet * m.field * m.length
}

/// Everything reported for one parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecyclingSummary {
    pub p_d1: f64,
    pub p_c1: f64,
    pub gamma_1: f64,
    /// Total dark-port probability P_d.
    pub p_d: f64,
    /// Total H-filter loss Γ.
    pub gamma: f64,
    /// Loss in the external loop (scheme I with L > 0), kept out of Γ.
    pub gamma_external: f64,
    /// Weight still circulating after the last round; for the no-recycling
    /// measurement this is the discarded bright-port weight p_c1.
    pub residual: f64,
    pub p_v: f64,
    pub theta_tilde: f64,
    pub eta: f64,
    /// y = (1−L)p_c1 for scheme I; x (or χₙ) for scheme II; 0 otherwise.
    pub aux: f64,
    /// κₙ for finite-n scheme II.
    pub kappa_n: Option<f64>,
    pub snr_enhancement: f64,
    /// δθ̃ = (2√(P_d·N))⁻¹
    pub delta_theta_tilde: f64,
    pub sensitivity_canonical: f64,
    pub sensitivity_paper_convention: f64,
}

impl RecyclingSummary {
    /// P_d + Γ + Γ_ext + residual − 1
    pub fn conservation_defect(&self) -> f64 {
        self.p_d + self.gamma + self.gamma_external + self.residual - 1.0
    }
}

/// (p_d1, p_c1, γ₁) for one pass.
pub fn scheme1_first_round(theta_rad: f64, beta_rad: f64) -> (f64, f64, f64) {
    let (st, ct) = theta_rad.sin_cos();
    let sh_t = (0.5 * theta_rad).sin();
    let sh_b = (0.5 * beta_rad).sin();
    // 1 − cos θ cos β = 2 sin²(θ/2) + 2 cos θ sin²(β/2)
    let p_d1 = sh_t * sh_t + ct * sh_b * sh_b;
    let p_c1 = (1.0 + 2.0 * ct * beta_rad.cos() + ct * ct) / 4.0;
    let gamma_1 = 0.25 * st * st;
    (p_d1, p_c1, gamma_1)
}

/// D₋ = ⟨H|Q̂₋†Q̂₋|H⟩ and D₊ = |Q₊|².
pub fn scheme2_weights(theta_rad: f64, beta_rad: f64) -> (f64, f64) {
    let (st, ct) = theta_rad.sin_cos();
    let (sb, cb) = beta_rad.sin_cos();
    let c2 = ct * ct;
    // ¼(1 + cos²θ − 2cos²θ cos 2β) = ¼ sin²θ + cos²θ sin²β
    let d_minus = 0.25 * st * st + c2 * sb * sb;
    let d_plus = 0.25 * (1.0 + c2 * c2 + 2.0 * c2 * (cb * cb - sb * sb));
    (d_minus, d_plus)
}

/// 1 − D₊ = D₋ + ¼sin²θ(2 + cos²θ), free of cancellation.
fn scheme2_escape(theta_rad: f64, beta_rad: f64) -> f64 {
    let (d_minus, _) = scheme2_weights(theta_rad, beta_rad);
    let (st, ct) = theta_rad.sin_cos();
    d_minus + 0.25 * st * st * (2.0 + ct * ct)
}

/// base^exp for base in [0, 1], flushed to 0 below [`UNDERFLOW_FLOOR`].
pub fn geometric_power(base: f64, exp: u64) -> f64 {
    if exp == 0 {
        return 1.0;
    }
    if base <= 0.0 {
        return 0.0;
    }
    let v = if exp > LOG_SPACE_EXPONENT {
        (exp as f64 * base.ln()).exp()
    } else {
        base.powi(exp as i32)
    };
    if v < UNDERFLOW_FLOOR {
        0.0
    } else {
        v
    }
}

/// R̃ = √(P_d·η)
pub fn snr_enhancement(p_d: f64, eta: f64) -> f64 {
    (p_d * eta).sqrt()
}

fn theta_tilde(p_v: f64) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p_v) {
        return Err(Error::Inconsistent(format!("P_V = {p_v} outside [0,1]")));
    }
    Ok(p_v.clamp(0.0, 1.0).sqrt().asin())
}

fn require(params: &ExperimentParams, scheme: Scheme) -> Result<()> {
    params.validate()?;
    if params.scheme != scheme {
        return Err(Error::invalid(
            "scheme",
            format!("expected {scheme}, got {}", params.scheme),
        ));
    }
    Ok(())
}

struct Tail {
    p_d: f64,
    gamma: f64,
    gamma_external: f64,
    residual: f64,
    p_v: f64,
    eta: f64,
    aux: f64,
    kappa_n: Option<f64>,
    paper_sensitivity: f64,
    /// R̃ when known in closed form; otherwise √(P_d·η).
    r_tilde: Option<f64>,
}

fn finish(params: &ExperimentParams, first: (f64, f64, f64), t: Tail) -> Result<RecyclingSummary> {
    let (p_d1, p_c1, gamma_1) = first;
    let theta_tilde = theta_tilde(t.p_v)?;
    let r = t.r_tilde.unwrap_or_else(|| snr_enhancement(t.p_d, t.eta));
    let n = params.photons_n;
    Ok(RecyclingSummary {
        p_d1,
        p_c1,
        gamma_1,
        p_d: t.p_d,
        gamma: t.gamma,
        gamma_external: t.gamma_external,
        residual: t.residual,
        p_v: t.p_v,
        theta_tilde,
        eta: t.eta,
        aux: t.aux,
        kappa_n: t.kappa_n,
        snr_enhancement: r,
        delta_theta_tilde: 1.0 / (2.0 * (t.p_d * n).sqrt()),
        sensitivity_canonical: 1.0 / (r * 2.0 * params.theta_rad.abs() * n.sqrt()),
        sensitivity_paper_convention: t.paper_sensitivity,
    })
}

/// Postselection into the dark port without any recycling.
pub fn no_recycle(params: &ExperimentParams) -> Result<RecyclingSummary> {
    require(params, Scheme::NoRecycle)?;
    single_pass(params)
}

fn single_pass(params: &ExperimentParams) -> Result<RecyclingSummary> {
    let (theta, beta) = (params.theta_rad, params.beta_rad);
    let first @ (p_d1, p_c1, gamma_1) = scheme1_first_round(theta, beta);
    if p_d1 < DEGENERACY_FLOOR {
        return Err(Error::DegenerateDarkPort(format!(
            "p_d1 = {p_d1:e} at theta={theta}, beta={beta}"
        )));
    }
    let eta = 1.0 / (4.0 * p_d1);
    finish(
        params,
        first,
        Tail {
            p_d: p_d1,
            gamma: gamma_1,
            gamma_external: 0.0,
            residual: p_c1,
            p_v: eta * theta.sin().powi(2),
            eta,
            aux: 0.0,
            kappa_n: None,
            paper_sensitivity: 1.0 / (theta.abs() * params.photons_n.sqrt()),
            // η·p_d1 = 1/4 identically
            r_tilde: Some(0.5),
        },
    )
}

/// External recycling loop, infinitely many rounds.
pub fn scheme1_infinite(params: &ExperimentParams) -> Result<RecyclingSummary> {
    require(params, Scheme::SchemeI)?;
    if params.rounds != Rounds::Infinite {
        return Err(Error::invalid(
            "rounds_n",
            "scheme1_infinite needs rounds = inf",
        ));
    }
    scheme1(params, None)
}

/// External recycling loop, `n` rounds.
pub fn scheme1_finite(params: &ExperimentParams) -> Result<RecyclingSummary> {
    require(params, Scheme::SchemeI)?;
    match params.rounds {
        Rounds::Finite(n) => scheme1(params, Some(n)),
        Rounds::Infinite => Err(Error::invalid(
            "rounds_n",
            "scheme1_finite needs a finite rounds_n",
        )),
    }
}

fn scheme1(params: &ExperimentParams, rounds: Option<u64>) -> Result<RecyclingSummary> {
    let (theta, beta, loss) = (params.theta_rad, params.beta_rad, params.loss_l);
    let first @ (p_d1, p_c1, gamma_1) = scheme1_first_round(theta, beta);
    let y = (1.0 - loss) * p_c1;
    // 1 − y = p_d1 + γ₁ + L·p_c1
    let escape = p_d1 + gamma_1 + loss * p_c1;
    if escape < DEGENERACY_FLOOR || p_d1 < DEGENERACY_FLOOR {
        return Err(Error::DegenerateDarkPort(format!(
            "1-(1-L)p_c1 = {escape:e}, p_d1 = {p_d1:e} at theta={theta}, beta={beta}, L={loss}"
        )));
    }
    // fraction of the infinite series collected after n rounds
    let (collected, residual) = match rounds {
        None => (1.0, 0.0),
        Some(n) => {
            let y_n = geometric_power(y, n);
            (1.0 - y_n, y_n)
        }
    };
    let sum = collected / escape;
    let p_d = p_d1 * sum;
    let sin2 = theta.sin().powi(2);
    let p_v = collected * sin2 / (4.0 * escape * p_d);
    finish(
        params,
        first,
        Tail {
            p_d,
            gamma: gamma_1 * sum,
            gamma_external: loss * p_c1 * sum,
            residual,
            p_v,
            eta: 1.0 / (4.0 * p_d1),
            aux: y,
            kappa_n: None,
            paper_sensitivity: (p_d1 / p_d).sqrt() / (theta.abs() * params.photons_n.sqrt()),
            r_tilde: None,
        },
    )
}

/// Internal recycling loop, infinitely many rounds.
pub fn scheme2_infinite(params: &ExperimentParams) -> Result<RecyclingSummary> {
    require(params, Scheme::SchemeII)?;
    if params.rounds != Rounds::Infinite {
        return Err(Error::invalid(
            "rounds_n",
            "scheme2_infinite needs rounds = inf",
        ));
    }
    scheme2(params, None)
}

/// Internal recycling loop, `n` rounds. `n = 1` is a single pass.
pub fn scheme2_finite(params: &ExperimentParams) -> Result<RecyclingSummary> {
    require(params, Scheme::SchemeII)?;
    match params.rounds {
        Rounds::Finite(1) => single_pass(params),
        Rounds::Finite(n) => scheme2(params, Some(n)),
        Rounds::Infinite => Err(Error::invalid(
            "rounds_n",
            "scheme2_finite needs a finite rounds_n",
        )),
    }
}

fn scheme2(params: &ExperimentParams, rounds: Option<u64>) -> Result<RecyclingSummary> {
    let (theta, beta) = (params.theta_rad, params.beta_rad);
    let first @ (p_d1, p_c1, _) = scheme1_first_round(theta, beta);
    let (d_minus, d_plus) = scheme2_weights(theta, beta);
    let escape = scheme2_escape(theta, beta);
    if escape < DEGENERACY_FLOOR {
        return Err(Error::DegenerateDarkPort(format!(
            "1-D+ = {escape:e} at theta={theta}, beta={beta}"
        )));
    }
    let (st, ct) = theta.sin_cos();
    let (sin2, cos2) = (st * st, ct * ct);

    // 1/κₙ = (1 − D₊ⁿ⁻¹)/(1 − D₊); residual is the bright weight p_c1·D₊ⁿ⁻¹
    let (inv_kappa, kappa_n, residual) = match rounds {
        None => (1.0 / escape, None, 0.0),
        Some(n) => {
            let d_pow = geometric_power(d_plus, n - 1);
            let kappa = escape / (1.0 - d_pow);
            (1.0 / kappa, Some(kappa), p_c1 * d_pow)
        }
    };
    let p_d = p_d1 + d_minus * p_c1 * inv_kappa;
    let gamma = 0.25 * sin2 * (1.0 + (2.0 + cos2) * p_c1 * inv_kappa);
    let x = cos2 * p_c1 * inv_kappa;
    let eta = match kappa_n {
        // ¼(κₙ + cos²θ p_c1)/(κₙ p_d1 + D₋ p_c1)
        Some(k) => 0.25 * (k + cos2 * p_c1) / (k * p_d1 + d_minus * p_c1),
        None => (1.0 + x) / (4.0 * p_d),
    };
    if p_d < DEGENERACY_FLOOR {
        return Err(Error::DegenerateDarkPort(format!("P_d = {p_d:e}")));
    }
    finish(
        params,
        first,
        Tail {
            p_d,
            gamma,
            gamma_external: 0.0,
            residual,
            p_v: eta * sin2,
            eta,
            aux: x,
            kappa_n,
            paper_sensitivity: 1.0 / (((1.0 + x) * params.photons_n).sqrt() * theta.abs()),
            r_tilde: None,
        },
    )
}

/// Dispatches on scheme and recycle count.
pub fn summarize(params: &ExperimentParams) -> Result<RecyclingSummary> {
    match (params.scheme, params.rounds) {
        (Scheme::NoRecycle, _) => no_recycle(params),
        (Scheme::SchemeI, Rounds::Infinite) => scheme1_infinite(params),
        (Scheme::SchemeI, Rounds::Finite(_)) => scheme1_finite(params),
        (Scheme::SchemeII, Rounds::Infinite) => scheme2_infinite(params),
        (Scheme::SchemeII, Rounds::Finite(_)) => scheme2_finite(params),
    }
}
