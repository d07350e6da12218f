use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use rpsm_core::analytic::{ExperimentParams, Rounds, Scheme};
use rpsm_core::cli::{self, ConfigError, OutputFormat, SelfCheckGrid, SweepSpec};

const EXIT_INVALID: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

/// Postselected measurement with photon recycling.
#[derive(Parser)]
#[command(name = "rpsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form summary for one parameter point, as JSON.
    Summary {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Evaluate a grid from a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output file; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
        #[arg(long)]
        no_header_timestamp: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Compare the closed forms with the pulse-train simulation.
    SelfCheck {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Photon-counting Monte Carlo of the θ̃ estimate.
    Mc {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        params: ParamArgs,
    },
}

/// Overrides for the fixed parameters; flags win over the config file.
#[derive(Args, Default)]
struct ParamArgs {
    /// none, scheme1 or scheme2
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long)]
    loss: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long)]
    photons: Option<f64>,
    /// Positive integer or `inf`.
    #[arg(long)]
    rounds: Option<Rounds>,
}

impl ParamArgs {
    fn apply(&self, p: &mut ExperimentParams) {
        if let Some(s) = self.scheme {
            p.scheme = s;
        }
        if let Some(v) = self.theta {
            p.theta_rad = v;
        }
        if let Some(v) = self.beta {
            p.beta_rad = v;
        }
        if let Some(v) = self.loss {
            p.loss_l = v;
        }
        if let Some(v) = self.epsilon {
            p.epsilon_rad = v;
        }
        if let Some(v) = self.photons {
            p.photons_n = v;
        }
        if let Some(v) = self.rounds {
            p.rounds = v;
        }
    }

    /// Spec from an optional file plus overrides; theta and beta must come
    /// from one or the other.
    fn resolve(&self, config: Option<&PathBuf>) -> Result<SweepSpec, ConfigError> {
        let mut spec = match config {
            Some(path) => cli::load_config(path)?,
            None => {
                let theta = self.theta.ok_or_else(|| {
                    ConfigError::validation("theta", "--theta is required without --config")
                })?;
                let beta = self.beta.ok_or_else(|| {
                    ConfigError::validation("beta", "--beta is required without --config")
                })?;
                SweepSpec::single(ExperimentParams::new(
                    self.scheme.unwrap_or(Scheme::SchemeI),
                    theta,
                    beta,
                ))
            }
        };
        self.apply(&mut spec.base);
        spec.validate()?;
        Ok(spec)
    }
}

fn init_threads() {
    let Ok(v) = std::env::var("RPSM_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) => {
            // 0 lets rayon pick
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        Err(_) => eprintln!("warning: ignoring RPSM_THREADS={v:?}"),
    }
}

fn fail(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_INVALID)
}

fn print_json<T: serde::Serialize>(value: &T) -> ExitCode {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match serde_json::to_writer_pretty(&mut out, value)
        .map_err(io::Error::from)
        .and_then(|_| writeln!(out))
    {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn sweep(spec: &SweepSpec, timestamp: bool) -> ExitCode {
    let rows = match cli::run_sweep(spec) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let stamp = timestamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let mut sink: Box<dyn Write> = match &spec.output_path {
        Some(p) if p.as_os_str() != "-" => match File::create(p) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => return fail(format!("cannot create {}: {e}", p.display())),
        },
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let written = match spec.output_format {
        OutputFormat::Csv => cli::write_csv(&rows, &mut sink, stamp),
        OutputFormat::Json => cli::write_json(&rows, &mut sink, stamp),
    };
    match written.and_then(|_| sink.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match cli.command {
        Command::Summary { config, params } => {
            let spec = match params.resolve(config.as_ref()) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            match rpsm_core::summarize(&spec.base) {
                Ok(s) => print_json(&s),
                Err(e) => fail(e),
            }
        }
        Command::Sweep {
            config,
            out,
            format,
            no_header_timestamp,
            params,
        } => {
            let mut spec = match params.resolve(Some(&config)) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            if out.is_some() {
                spec.output_path = out;
            }
            if let Some(f) = format {
                spec.output_format = f;
            }
            sweep(&spec, !no_header_timestamp)
        }
        Command::SelfCheck { tol } => {
            if tol.is_nan() || tol < 0.0 {
                return fail("invalid tol: must be non-negative");
            }
            let report = cli::self_check(&SelfCheckGrid::default(), tol);
            let code = print_json(&report);
            if !report.pass {
                eprintln!(
                    "self-check FAILED: worst discrepancy {:.3e} > tol {:.1e}",
                    report.worst(),
                    tol
                );
                return ExitCode::from(EXIT_CHECK_FAILED);
            }
            code
        }
        Command::Mc {
            config,
            trials,
            seed,
            params,
        } => {
            let spec = match params.resolve(config.as_ref()) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            if trials.is_some_and(|t| t < 2) {
                return fail("invalid trials: trials must be at least 2");
            }
            match cli::mc_command(&spec, trials, seed) {
                Ok(r) => print_json(&r),
                Err(e) => fail(e),
            }
        }
    }
}
