//! Photon-counting Monte Carlo for the shot-noise limited estimate of θ̃.
//!
//! A pulse of coherent light puts a Poisson number of photons (mean P_d·N)
//! into the dark port; each is found V-polarized with probability P_V. The
//! estimate is θ̂ = asin √(n_V / n_detected). Trials run on independent
//! ChaCha20 streams (`seed = master_seed`, `stream = trial index`), so the
//! result does not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, ExperimentParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub params: ExperimentParams,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean_theta_tilde: f64,
    pub empirical_std: f64,
    /// (2√(P_d·N))⁻¹
    pub predicted_std: f64,
    pub rel_deviation: f64,
    /// θ̃ from the closed form, for comparison with the sample mean.
    pub theta_tilde_analytic: f64,
    pub trials: usize,
    /// Trials with at least one detected photon.
    pub trials_used: usize,
}

/// Generator for one trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// (n_detected, n_V) for one pulse.
pub fn sample_counts_with<R: Rng + ?Sized>(
    p_d: f64,
    p_v: f64,
    photons_n: f64,
    rng: &mut R,
) -> (u64, u64) {
    let mean = p_d * photons_n;
    if mean.is_nan() || mean <= 0.0 {
        return (0, 0);
    }
    let detected = Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng) as u64;
    let p_v = p_v.clamp(0.0, 1.0);
    let v = Binomial::new(detected, p_v)
        .expect("p in [0,1]")
        .sample(rng);
    (detected, v)
}

/// [`sample_counts_with`] on a fresh generator seeded with `seed`.
pub fn sample_counts(p_d: f64, p_v: f64, photons_n: f64, seed: u64) -> (u64, u64) {
    sample_counts_with(p_d, p_v, photons_n, &mut ChaCha20Rng::seed_from_u64(seed))
}

pub fn estimate_theta(n_detected: u64, n_v: u64) -> Result<f64> {
    if n_detected == 0 {
        return Err(Error::EmptySample);
    }
    if n_v > n_detected {
        return Err(Error::invalid("n_V", "n_V cannot exceed n_detected"));
    }
    Ok((n_v as f64 / n_detected as f64).sqrt().asin())
}

pub fn run_trials(config: &McConfig) -> Result<McEstimate> {
    if config.trials < 2 {
        return Err(Error::invalid("trials", "trials must be at least 2"));
    }
    let summary = analytic::summarize(&config.params)?;
    let photons = config.params.photons_n;

    let estimates: Vec<Option<f64>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.master_seed, i);
            let (det, v) = sample_counts_with(summary.p_d, summary.p_v, photons, &mut rng);
            estimate_theta(det, v).ok()
        })
        .collect();

    // ordered reduction
    let used: Vec<f64> = estimates.into_iter().flatten().collect();
    if used.len() < 2 {
        return Err(Error::EmptySample);
    }
    let count = used.len() as f64;
    let mean = used.iter().sum::<f64>() / count;
    let var = used.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let empirical_std = var.sqrt();
    let predicted_std = summary.delta_theta_tilde;

    Ok(McEstimate {
        mean_theta_tilde: mean,
        empirical_std,
        predicted_std,
        rel_deviation: (empirical_std - predicted_std).abs() / predicted_std,
        theta_tilde_analytic: summary.theta_tilde,
        trials: config.trials,
        trials_used: used.len(),
    })
}
