//! Closed forms against the pulse-train oracle over a fixed grid.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, ExperimentParams, RecyclingSummary, Rounds, Scheme};
use crate::error::Error;
use crate::oracle::{self, PulseTrainResult};

/// |a − b| / max(1, |b|)
pub fn discrepancy(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfCheckGrid {
    pub thetas: Vec<f64>,
    pub betas: Vec<f64>,
    pub losses: Vec<f64>,
    pub rounds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    /// External-loop phases, checked on a coarse (θ, β) subset.
    pub epsilons: Vec<f64>,
    /// Side of the (θ, β) subset used for ε and n = ∞.
    pub subgrid: usize,
    /// Oracle round count standing in for n = ∞.
    pub infinite_rounds: u64,
    /// Extra (θ, β) points, typically degenerate ones.
    pub extra_points: Vec<(f64, f64)>,
}

/// `count` points on (0, stop].
pub fn open_grid(stop: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| stop * i as f64 / count as f64)
        .collect()
}

impl Default for SelfCheckGrid {
    fn default() -> Self {
        SelfCheckGrid {
            thetas: open_grid(FRAC_PI_3, 20),
            betas: open_grid(FRAC_PI_2, 20),
            losses: vec![0.0, 0.1, 0.5],
            rounds: vec![1, 2, 10, 1000],
            schemes: vec![Scheme::NoRecycle, Scheme::SchemeI, Scheme::SchemeII],
            epsilons: vec![0.0, 1.0, PI],
            subgrid: 5,
            infinite_rounds: 100_000,
            extra_points: vec![(0.0, 0.0)],
        }
    }
}

impl SelfCheckGrid {
    fn subset(v: &[f64], k: usize) -> Vec<f64> {
        if v.len() <= k || k == 0 {
            return v.to_vec();
        }
        (0..k)
            .map(|i| v[i * (v.len() - 1) / (k - 1).max(1)])
            .collect()
    }

    /// (params, oracle rounds) for every check.
    pub fn points(&self) -> Vec<(ExperimentParams, u64)> {
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &theta in &self.thetas {
                for &beta in &self.betas {
                    for &loss in &self.losses {
                        for &n in &self.rounds {
                            let p = ExperimentParams::new(scheme, theta, beta)
                                .with_loss(loss)
                                .with_rounds(Rounds::Finite(n));
                            out.push((p, n));
                        }
                    }
                }
            }
        }
        let thetas = Self::subset(&self.thetas, self.subgrid);
        let betas = Self::subset(&self.betas, self.subgrid);
        for &scheme in &self.schemes {
            for &theta in &thetas {
                for &beta in &betas {
                    for &loss in &self.losses {
                        let base = ExperimentParams::new(scheme, theta, beta).with_loss(loss);
                        out.push((base.with_rounds(Rounds::Infinite), self.infinite_rounds));
                        for &eps in &self.epsilons {
                            for &n in &self.rounds {
                                let p = base.with_epsilon(eps).with_rounds(Rounds::Finite(n));
                                out.push((p, n));
                            }
                        }
                    }
                }
            }
            for &(theta, beta) in &self.extra_points {
                for &n in &self.rounds {
                    out.push((
                        ExperimentParams::new(scheme, theta, beta).with_rounds(Rounds::Finite(n)),
                        n,
                    ));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfCheckReport {
    pub tolerance: f64,
    pub points_checked: usize,
    pub degenerate_points: usize,
    /// Points where the closed form and the oracle disagree on whether the
    /// point is degenerate, or either one errored.
    pub mismatched_points: usize,
    /// Largest discrepancy per reported quantity.
    pub max_discrepancy: BTreeMap<String, f64>,
    /// Largest |P_d + Γ + Γ_ext + residual − 1| from the closed forms.
    pub max_conservation_analytic: f64,
    /// Same, from the oracle.
    pub max_conservation_oracle: f64,
    pub pass: bool,
}

impl SelfCheckReport {
    pub fn worst(&self) -> f64 {
        self.max_discrepancy
            .values()
            .copied()
            .chain([self.max_conservation_analytic, self.max_conservation_oracle])
            .fold(0.0, f64::max)
    }
}

enum Outcome {
    Compared(Vec<(&'static str, f64)>, f64, f64),
    Degenerate,
    Mismatch,
}

fn compare(
    a: &RecyclingSummary,
    o: &PulseTrainResult,
    theta: f64,
) -> Option<Vec<(&'static str, f64)>> {
    let p_v = o.p_v_mixed?;
    let theta_tilde = p_v.sqrt().asin();
    let eta = p_v / theta.sin().powi(2);
    let r_tilde = (o.p_d_total * eta).sqrt();
    Some(vec![
        ("P_d", discrepancy(a.p_d, o.p_d_total)),
        ("Gamma", discrepancy(a.gamma, o.gamma_hp)),
        ("Gamma_ext", discrepancy(a.gamma_external, o.gamma_external)),
        ("residual", discrepancy(a.residual, o.residual)),
        ("P_V", discrepancy(a.p_v, p_v)),
        ("theta_tilde", discrepancy(a.theta_tilde, theta_tilde)),
        ("eta", discrepancy(a.eta, eta)),
        ("R_tilde", discrepancy(a.snr_enhancement, r_tilde)),
    ])
}

fn check_point(params: &ExperimentParams, oracle_rounds: u64) -> Outcome {
    let analytic = analytic::summarize(params);
    let oracle = oracle::simulate(params, oracle_rounds);
    match (analytic, oracle) {
        (Err(Error::DegenerateDarkPort(_)), Ok(o)) if o.p_v_mixed.is_none() => Outcome::Degenerate,
        (Ok(a), Ok(o)) => match compare(&a, &o, params.theta_rad) {
            Some(d) => Outcome::Compared(
                d,
                a.conservation_defect().abs(),
                o.conservation_defect().abs(),
            ),
            None => Outcome::Mismatch,
        },
        _ => Outcome::Mismatch,
    }
}

pub fn self_check(grid: &SelfCheckGrid, tol: f64) -> SelfCheckReport {
    let points = grid.points();
    let outcomes: Vec<Outcome> = points.par_iter().map(|(p, n)| check_point(p, *n)).collect();

    let mut max_discrepancy: BTreeMap<String, f64> = BTreeMap::new();
    let (mut cons_a, mut cons_o) = (0.0f64, 0.0f64);
    let (mut degenerate, mut mismatched) = (0, 0);
    for outcome in outcomes {
        match outcome {
            Outcome::Compared(d, ca, co) => {
                for (name, v) in d {
                    let e = max_discrepancy.entry(name.to_string()).or_insert(0.0);
                    // NaN must not be swallowed by max
                    if v.is_nan() || v > *e {
                        *e = if v.is_nan() { f64::INFINITY } else { v };
                    }
                }
                cons_a = cons_a.max(ca);
                cons_o = cons_o.max(co);
            }
            Outcome::Degenerate => degenerate += 1,
            Outcome::Mismatch => mismatched += 1,
        }
    }

    let mut report = SelfCheckReport {
        tolerance: tol,
        points_checked: points.len(),
        degenerate_points: degenerate,
        mismatched_points: mismatched,
        max_discrepancy,
        max_conservation_analytic: cons_a,
        max_conservation_oracle: cons_o,
        pass: false,
    };
    report.pass = mismatched == 0 && report.worst() <= tol;
    report
}
