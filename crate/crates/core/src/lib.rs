//! Postselected amplification of Faraday rotation in a Mach–Zehnder
//! interferometer, with and without pulse recycling.
//!
//! * [`kernel`]: fixed-size complex linear algebra.
//! * [`interferometer`]: optical elements and single-pass operators.
//! * [`analytic`]: closed forms for every scheme and recycle count.
//! * [`oracle`]: round-by-round pulse-train simulation used as reference.
//! * [`mc`]: photon-counting Monte Carlo for the shot-noise limit.
//! * [`cli`]: config files, sweeps, self-check and the `rpsm` front end.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod interferometer;
pub mod kernel;
pub mod mc;
pub mod oracle;

pub use analytic::{summarize, ExperimentParams, RecyclingSummary, Rounds, Scheme};
pub use error::{Error, Result};
