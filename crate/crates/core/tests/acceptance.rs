//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rpsm_core::analytic::{self, ExperimentParams, Rounds, Scheme};
use rpsm_core::cli::{self_check, SelfCheckGrid};
use rpsm_core::interferometer::{compose_first_pass, single_pass_bright, single_pass_dark};
use rpsm_core::mc::{run_trials, McConfig};
use rpsm_core::oracle;

// mpmath, 40 digits, at θ = 0.1, β = 0.2, L = 0
const S1_P_D: f64 = 0.832_846_382_352_950_493_16;
const S1_GAMMA: f64 = 0.167_153_617_647_049_506_84;
const S1_P_V: f64 = 0.200_701_619_396_855_074_88;
const S1_R: f64 = 4.095_264_490_863_704_554_8;
const S2_P_D: f64 = 0.847_784_891_941_547_358_02;
const S2_X: f64 = 19.896_269_968_709_371_738;
const S2_ETA: f64 = 6.162_020_038_141_384_201_3;
const S2_R: f64 = 2.285_621_904_904_077_290_9;

const MC_SEED: u64 = 42;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_strict(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `count` points on (0, stop].
fn open_grid(stop: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| stop * i as f64 / count as f64)
        .collect()
}

fn summary(scheme: Scheme, theta: f64, beta: f64, rounds: Rounds) -> analytic::RecyclingSummary {
    analytic::summarize(&ExperimentParams::new(scheme, theta, beta).with_rounds(rounds))
        .unwrap_or_else(|e| panic!("{scheme} θ={theta} β={beta} n={rounds}: {e}"))
}

fn conservation() -> Outcome {
    let start = Instant::now();
    let thetas = open_grid(FRAC_PI_3, 50);
    let betas = open_grid(FRAC_PI_2, 50);
    let (mut worst_inf, mut worst_fin, mut worst_oracle) = (0.0f64, 0.0f64, 0.0f64);
    for &theta in &thetas {
        for &beta in &betas {
            for scheme in [Scheme::SchemeI, Scheme::SchemeII] {
                let s = summary(scheme, theta, beta, Rounds::Infinite);
                worst_inf = worst_inf.max((s.p_d + s.gamma - 1.0).abs());
                for n in [1, 2, 10, 100] {
                    let s = summary(scheme, theta, beta, Rounds::Finite(n));
                    worst_fin = worst_fin.max((s.p_d + s.gamma + s.residual - 1.0).abs());
                    let params = ExperimentParams::new(scheme, theta, beta);
                    let o = oracle::simulate(&params, n).unwrap();
                    worst_oracle =
                        worst_oracle.max((o.p_d_total + o.gamma_hp + o.residual - 1.0).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_inf <= 1e-12
        && worst_fin <= 1e-12
        && worst_oracle <= 1e-12
        && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!(
            "max |P_d+Γ-1| (n=∞) {worst_inf:.1e}, max |P_d+Γ+residual-1| (n finite) {worst_fin:.1e}, oracle {worst_oracle:.1e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let report = self_check(&SelfCheckGrid::default(), 1e-10);
    let elapsed = start.elapsed();
    // θ = β = 0 for three schemes and four round counts
    let degenerate_ok = report.degenerate_points == 12;
    let pass = report.pass && degenerate_ok && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} points, worst discrepancy {:.1e}, {} degenerate, {} mismatched, {:.2}s",
            report.points_checked,
            report.worst(),
            report.degenerate_points,
            report.mismatched_points,
            elapsed.as_secs_f64()
        ),
    )
}

fn compositional() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..50 {
        for j in 0..50 {
            let theta = PI * i as f64 / 50.0;
            let beta = PI * j as f64 / 50.0;
            let (m_minus, m_plus) = compose_first_pass(theta, beta);
            worst = worst
                .max(m_minus.max_abs_diff(&single_pass_dark(theta, beta)))
                .max((m_plus - single_pass_bright(theta, beta)).norm());
            count += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{count} points, max element deviation {worst:.1e}"),
    )
}

fn scheme1_invariance() -> Outcome {
    let (mut worst_pv, mut worst_eta) = (0.0f64, 0.0f64);
    for theta in [0.01, 0.1, 0.5, 1.0] {
        for beta in [0.05, 0.2, 0.8, 1.5] {
            let base = ExperimentParams::new(Scheme::SchemeI, theta, beta);
            let reference = analytic::summarize(&base.with_rounds(Rounds::Finite(1))).unwrap();
            let eta_ref = 1.0 / (4.0 * reference.p_d1);
            for loss in [0.0, 0.1, 0.5, 0.9] {
                for eps in [0.0, 1.0, PI] {
                    for rounds in [1, 2, 10, 100, 100_000] {
                        let p = base
                            .with_loss(loss)
                            .with_epsilon(eps)
                            .with_rounds(Rounds::Finite(rounds));
                        let s = analytic::summarize(&p).unwrap();
                        worst_pv = worst_pv.max((s.p_v - reference.p_v).abs());
                        worst_eta = worst_eta.max(rel_strict(s.eta, eta_ref));
                        if rounds <= 100 {
                            let o = oracle::simulate(&p, rounds).unwrap();
                            worst_pv = worst_pv.max((o.p_v_mixed.unwrap() - reference.p_v).abs());
                        }
                    }
                    let s = analytic::summarize(&base.with_loss(loss).with_epsilon(eps)).unwrap();
                    worst_pv = worst_pv.max((s.p_v - reference.p_v).abs());
                    worst_eta = worst_eta.max(rel_strict(s.eta, eta_ref));
                }
            }
        }
    }
    outcome(
        worst_pv <= 1e-12 && worst_eta <= 1e-12,
        format!("max P_V spread {worst_pv:.1e}, max rel |η-1/(4p_d1)| {worst_eta:.1e}"),
    )
}

fn anchors() -> Outcome {
    let s1 = summary(Scheme::SchemeI, 0.1, 0.2, Rounds::Infinite);
    let s2 = summary(Scheme::SchemeII, 0.1, 0.2, Rounds::Infinite);
    let o1 = oracle::simulate(&ExperimentParams::new(Scheme::SchemeI, 0.1, 0.2), 100_000).unwrap();
    let o2 = oracle::simulate(&ExperimentParams::new(Scheme::SchemeII, 0.1, 0.2), 100_000).unwrap();

    // four-to-six digit reference values
    let coarse = [
        (s1.p_d, 0.832846),
        (s1.gamma, 0.167154),
        (s1.p_v, 0.200700),
        (s1.snr_enhancement, 4.0953),
        (s2.p_d, 0.847788),
        (s2.aux, 19.8964),
        (s2.eta, 6.16204),
        (s2.snr_enhancement, 2.28564),
    ];
    let worst_coarse = coarse
        .iter()
        .map(|&(a, b)| rel_strict(a, b))
        .fold(0.0, f64::max);

    let fine = [
        (s1.p_d, S1_P_D),
        (s1.gamma, S1_GAMMA),
        (s1.p_v, S1_P_V),
        (s1.snr_enhancement, S1_R),
        (s2.p_d, S2_P_D),
        (s2.aux, S2_X),
        (s2.eta, S2_ETA),
        (s2.snr_enhancement, S2_R),
        (o1.p_d_total, S1_P_D),
        (o1.gamma_hp, S1_GAMMA),
        (o1.p_v_mixed.unwrap(), S1_P_V),
        (o2.p_d_total, S2_P_D),
    ];
    let worst_fine = fine
        .iter()
        .map(|&(a, b)| rel_strict(a, b))
        .fold(0.0, f64::max);
    outcome(
        worst_coarse <= 1e-4 && worst_fine <= 1e-10,
        format!(
            "max rel deviation {worst_coarse:.1e} vs 6-digit reference, {worst_fine:.1e} vs high-precision"
        ),
    )
}

fn finite_n_convergence() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut monotone = true;
    for scheme in [Scheme::SchemeI, Scheme::SchemeII] {
        let inf = summary(scheme, 0.1, 0.2, Rounds::Infinite).p_d;
        let at = summary(scheme, 0.1, 0.2, Rounds::Finite(100_000)).p_d;
        let o = oracle::simulate(&ExperimentParams::new(scheme, 0.1, 0.2), 100_000).unwrap();
        worst_gap = worst_gap
            .max((at - inf).abs())
            .max((o.p_d_total - inf).abs());

        let mut prev = 0.0;
        let ns = (1..=2000).chain([5000, 10_000, 50_000, 100_000, 1_000_000]);
        for n in ns {
            let p = summary(scheme, 0.1, 0.2, Rounds::Finite(n)).p_d;
            monotone &= p >= prev;
            prev = p;
        }
        monotone &= inf >= prev;
    }
    outcome(
        worst_gap < 1e-10 && monotone,
        format!("max |P_d(1e5)-P_d(∞)| {worst_gap:.1e}, P_d nondecreasing in n: {monotone}"),
    )
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn monotonicity() -> Outcome {
    let mut failures = Vec::new();
    for scheme in [Scheme::SchemeI, Scheme::SchemeII] {
        for theta in [0.005, 0.01, 0.05] {
            let (lo, hi) = (5.0 * theta, FRAC_PI_2);
            let r: Vec<f64> = (0..=400)
                .map(|i| lo + (hi - lo) * i as f64 / 400.0)
                .map(|beta| summary(scheme, theta, beta, Rounds::Infinite).snr_enhancement)
                .collect();
            if !strictly_decreasing(&r) {
                failures.push(format!("{scheme} in β at θ={theta}"));
            }
        }
        for beta in [0.05, 0.1, 0.5, 1.0, FRAC_PI_2] {
            let r: Vec<f64> = open_grid(FRAC_PI_3, 400)
                .into_iter()
                .map(|theta| summary(scheme, theta, beta, Rounds::Infinite).snr_enhancement)
                .collect();
            if !strictly_decreasing(&r) {
                failures.push(format!("{scheme} in θ at β={beta}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        "R̃ strictly decreasing in β (θ ∈ {0.005, 0.01, 0.05}) and in θ (θ ∈ (0, π/3]), both schemes"
            .to_string()
    } else {
        format!("not strictly decreasing: {}", failures.join("; "))
    };
    outcome(failures.is_empty(), detail)
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut stds = Vec::new();
    for scheme in [Scheme::NoRecycle, Scheme::SchemeI, Scheme::SchemeII] {
        let est = run_trials(&McConfig {
            params: ExperimentParams::new(scheme, 0.05, 0.1).with_photons(1e6),
            trials: 2000,
            master_seed: MC_SEED,
        })
        .unwrap();
        pass &= est.rel_deviation < 0.05;
        stds.push(est.empirical_std);
        parts.push(format!("{scheme} {:.2}%", 100.0 * est.rel_deviation));
    }
    // recycling collects more photons, so the spread must shrink
    pass &= stds[1] < stds[0] && stds[2] < stds[0];
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "std deviation from (2√(P_d·N))⁻¹: {}, {:.2}s",
            parts.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn snr_identity() -> Outcome {
    let (mut worst, mut count) = (0.0f64, 0);
    let mut half_exact = true;
    let mut worst_half = 0.0f64;
    for theta in open_grid(FRAC_PI_3, 30) {
        for beta in open_grid(FRAC_PI_2, 30) {
            for scheme in [Scheme::NoRecycle, Scheme::SchemeI, Scheme::SchemeII] {
                for rounds in [
                    Rounds::Finite(1),
                    Rounds::Finite(7),
                    Rounds::Finite(1000),
                    Rounds::Infinite,
                ] {
                    for loss in [0.0, 0.3] {
                        let p = ExperimentParams::new(scheme, theta, beta)
                            .with_rounds(rounds)
                            .with_loss(loss);
                        let s = analytic::summarize(&p).unwrap();
                        // η from its definition P_V = η sin²θ
                        let eta = s.p_v / theta.sin().powi(2);
                        worst = worst.max((s.snr_enhancement - (s.p_d * eta).sqrt()).abs());
                        count += 1;
                        if scheme == Scheme::NoRecycle {
                            half_exact &= s.snr_enhancement == 0.5;
                            worst_half = worst_half.max((s.snr_enhancement - 0.5).abs());
                        }
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-12 && half_exact,
        format!(
            "{count} points, max |R̃-√(P_d·η)| {worst:.1e}, no-recycle R̃ == 1/2: {half_exact} (max dev {worst_half:.1e})"
        ),
    )
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rpsm"))
        .args(args)
        .env("RPSM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out.stdout)
}

fn cli_determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let config = dir.path().join("sweep.toml");
    let text = "scheme = \"scheme2\"\nphotons = 1e6\nseed = 42\ntrials = 500\n\n\
                [sweep.theta]\nstart = 0.01\nstop = 0.5\ncount = 40\n\n\
                [sweep.beta]\nstart = 0.05\nstop = 1.5\ncount = 40\nspacing = \"log\"\n";
    if let Err(e) = std::fs::write(&config, text) {
        return outcome(false, e.to_string());
    }
    let cfg = config.to_str().unwrap();
    let mut checks = Vec::new();
    for args in [
        vec![
            "sweep",
            "--config",
            cfg,
            "--out",
            "-",
            "--no-header-timestamp",
        ],
        vec![
            "sweep",
            "--config",
            cfg,
            "--out",
            "-",
            "--format",
            "json",
            "--no-header-timestamp",
        ],
        vec!["mc", "--config", cfg, "--theta", "0.05", "--beta", "0.1"],
    ] {
        let runs: Result<Vec<Vec<u8>>, String> =
            ["1", "4", "0"].iter().map(|t| run_cli(&args, t)).collect();
        match runs {
            Ok(r) => checks.push((
                args[0].to_string(),
                r.len(),
                r.windows(2).all(|w| w[0] == w[1]),
                r[0].len(),
            )),
            Err(e) => return outcome(false, format!("{} failed: {e}", args[0])),
        }
    }
    let pass = checks.iter().all(|c| c.2);
    let detail = checks
        .iter()
        .map(|(name, runs, same, bytes)| format!("{name} x{runs} identical={same} ({bytes} bytes)"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("conservation", conservation),
        ("oracle equivalence", oracle_equivalence),
        ("compositional check", compositional),
        ("scheme I invariances", scheme1_invariance),
        ("regression anchors", anchors),
        ("finite-n convergence", finite_n_convergence),
        ("monotonicity", monotonicity),
        ("Monte Carlo shot noise", monte_carlo),
        ("SNR convention identity", snr_identity),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {:<24} {}  {}",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
