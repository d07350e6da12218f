//! Library side of the `rpsm` command line tool.

pub mod config;
pub mod self_check;
pub mod sweep;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::analytic::ExperimentParams;
use crate::error::Error;
use crate::mc::{self, McConfig, McEstimate};

pub use config::{parse_config, render, Axis, AxisParam, Grid, OutputFormat, SweepSpec};
pub use self_check::{self_check, SelfCheckGrid, SelfCheckReport};
pub use sweep::{run_sweep, write_csv, write_json, SweepRow, CSV_COLUMNS};

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("{0}")]
    Io(String),
}

impl ConfigError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn from_param_error(e: &Error) -> Self {
        match e {
            Error::InvalidParameter { field, reason } => {
                ConfigError::validation(field, reason.clone())
            }
            other => ConfigError::validation("params", other.to_string()),
        }
    }
}

pub fn load_config(path: &Path) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub scheme: String,
    pub theta: f64,
    pub beta: f64,
    pub loss: f64,
    pub epsilon: f64,
    pub photons: f64,
    pub rounds: String,
    pub seed: u64,
    #[serde(flatten)]
    pub estimate: McEstimate,
}

/// Runs the Monte Carlo for the base point of `spec`. Arguments override
/// the `trials` and `seed` keys of the file.
pub fn mc_command(
    spec: &SweepSpec,
    trials: Option<usize>,
    seed: Option<u64>,
) -> crate::Result<McReport> {
    let params: ExperimentParams = spec.base;
    params.validate()?;
    let master_seed = seed.or(spec.seed).unwrap_or(DEFAULT_SEED);
    let estimate = mc::run_trials(&McConfig {
        params,
        trials: trials.or(spec.trials).unwrap_or(DEFAULT_TRIALS),
        master_seed,
    })?;
    Ok(McReport {
        scheme: params.scheme.to_string(),
        theta: params.theta_rad,
        beta: params.beta_rad,
        loss: params.loss_l,
        epsilon: params.epsilon_rad,
        photons: params.photons_n,
        rounds: params.rounds.to_string(),
        seed: master_seed,
        estimate,
    })
}
