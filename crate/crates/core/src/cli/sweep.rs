//! Parameter sweeps and their CSV / JSON output.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, ExperimentParams, RecyclingSummary};
use crate::cli::{ConfigError, SweepSpec};
use crate::error::Error;

pub const CSV_COLUMNS: [&str; 19] = [
    "scheme",
    "theta",
    "beta",
    "loss",
    "epsilon",
    "n",
    "p_d1",
    "p_c1",
    "gamma1",
    "P_d",
    "Gamma",
    "residual",
    "P_V",
    "theta_tilde",
    "eta",
    "R_tilde",
    "sensitivity_canonical",
    "sensitivity_paper_convention",
    "status",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// No light reaches the dark port; only the first-pass weights are filled.
    Degenerate,
    Error,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Degenerate => "degenerate",
            RowStatus::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub params: ExperimentParams,
    pub p_d1: f64,
    pub p_c1: f64,
    pub gamma_1: f64,
    pub summary: Option<RecyclingSummary>,
    pub status: RowStatus,
}

impl SweepRow {
    pub fn evaluate(params: ExperimentParams) -> Self {
        let (p_d1, p_c1, gamma_1) =
            analytic::scheme1_first_round(params.theta_rad, params.beta_rad);
        let (summary, status) = match analytic::summarize(&params) {
            Ok(s) => (Some(s), RowStatus::Ok),
            Err(Error::DegenerateDarkPort(_)) => (None, RowStatus::Degenerate),
            Err(_) => (None, RowStatus::Error),
        };
        SweepRow {
            params,
            p_d1,
            p_c1,
            gamma_1,
            summary,
            status,
        }
    }

    /// Numeric columns in [`CSV_COLUMNS`] order, `theta` through the two
    /// sensitivities, with `n` excluded.
    fn numbers(&self) -> [f64; 16] {
        let p = &self.params;
        let s = |f: fn(&RecyclingSummary) -> f64| self.summary.as_ref().map_or(f64::NAN, f);
        [
            p.theta_rad,
            p.beta_rad,
            p.loss_l,
            p.epsilon_rad,
            self.p_d1,
            self.p_c1,
            self.gamma_1,
            s(|r| r.p_d),
            s(|r| r.gamma),
            s(|r| r.residual),
            s(|r| r.p_v),
            s(|r| r.theta_tilde),
            s(|r| r.eta),
            s(|r| r.snr_enhancement),
            s(|r| r.sensitivity_canonical),
            s(|r| r.sensitivity_paper_convention),
        ]
    }
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ConfigError> {
    spec.validate()?;
    Ok(spec
        .grid_points()
        .into_par_iter()
        .map(SweepRow::evaluate)
        .collect())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `timestamp`, when given, is written as a leading `# generated_at_unix` comment.
pub fn write_csv<W: Write>(
    rows: &[SweepRow],
    out: &mut W,
    timestamp: Option<u64>,
) -> io::Result<()> {
    if let Some(t) = timestamp {
        writeln!(out, "# generated_at_unix = {t}")?;
    }
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for row in rows {
        let n = row.numbers();
        let mut fields: Vec<String> = Vec::with_capacity(CSV_COLUMNS.len());
        fields.push(row.params.scheme.to_string());
        fields.extend(n[..4].iter().map(|&x| num(x)));
        fields.push(row.params.rounds.to_string());
        fields.extend(n[4..].iter().map(|&x| num(x)));
        fields.push(row.status.as_str().to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonRow<'a> {
    scheme: &'a str,
    theta: f64,
    beta: f64,
    loss: f64,
    epsilon: f64,
    n: String,
    p_d1: f64,
    p_c1: f64,
    gamma1: f64,
    #[serde(rename = "P_d")]
    p_d: Option<f64>,
    #[serde(rename = "Gamma")]
    gamma: Option<f64>,
    residual: Option<f64>,
    #[serde(rename = "P_V")]
    p_v: Option<f64>,
    theta_tilde: Option<f64>,
    eta: Option<f64>,
    #[serde(rename = "R_tilde")]
    r_tilde: Option<f64>,
    sensitivity_canonical: Option<f64>,
    sensitivity_paper_convention: Option<f64>,
    status: RowStatus,
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    rows: Vec<JsonRow<'a>>,
}

pub fn write_json<W: Write>(
    rows: &[SweepRow],
    out: &mut W,
    timestamp: Option<u64>,
) -> io::Result<()> {
    let doc = JsonDoc {
        generated_at_unix: timestamp,
        rows: rows
            .iter()
            .map(|r| {
                let s = r.summary.as_ref();
                JsonRow {
                    scheme: r.params.scheme.as_str(),
                    theta: r.params.theta_rad,
                    beta: r.params.beta_rad,
                    loss: r.params.loss_l,
                    epsilon: r.params.epsilon_rad,
                    n: r.params.rounds.to_string(),
                    p_d1: r.p_d1,
                    p_c1: r.p_c1,
                    gamma1: r.gamma_1,
                    p_d: s.map(|s| s.p_d),
                    gamma: s.map(|s| s.gamma),
                    residual: s.map(|s| s.residual),
                    p_v: s.map(|s| s.p_v),
                    theta_tilde: s.map(|s| s.theta_tilde),
                    eta: s.map(|s| s.eta),
                    r_tilde: s.map(|s| s.snr_enhancement),
                    sensitivity_canonical: s.map(|s| s.sensitivity_canonical),
                    sensitivity_paper_convention: s.map(|s| s.sensitivity_paper_convention),
                    status: r.status,
                }
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)
}
