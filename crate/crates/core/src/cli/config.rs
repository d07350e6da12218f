//! Sweep configuration files.
//!
//! The format is flat TOML: top-level `key = value` pairs for the fixed
//! parameters, and one `[sweep.<axis>]` table per swept axis.
//!
//! ```toml
//! scheme = "scheme1"        # none | scheme1 | scheme2
//! theta = 0.1               # rad
//! beta = 0.2                # rad
//! loss = 0.0                # external-loop loss, [0, 1)
//! epsilon = 0.0             # external-loop phase, rad
//! photons = 1e6             # mean photons per pulse
//! rounds = "inf"            # or a positive integer
//! output = "fig3.csv"
//! format = "csv"            # csv | json
//! trials = 2000             # mc only
//! seed = 42                 # mc only
//!
//! [sweep.beta]
//! start = 0.05
//! stop = 0.5
//! count = 50
//! spacing = "linear"        # linear | log
//!
//! [sweep.n]
//! values = [1, 10, 100]
//! ```
//!
//! Axes are `theta`, `beta`, `loss` and `n`; at most two per file. Rows are
//! emitted row-major in that axis order (the first swept axis is outermost).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analytic::{ExperimentParams, Rounds, Scheme};
use crate::cli::ConfigError;

pub const MAX_SWEPT_AXES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxisParam {
    Theta,
    Beta,
    Loss,
    Rounds,
}

impl AxisParam {
    pub const ALL: [AxisParam; 4] = [
        AxisParam::Theta,
        AxisParam::Beta,
        AxisParam::Loss,
        AxisParam::Rounds,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            AxisParam::Theta => "theta",
            AxisParam::Beta => "beta",
            AxisParam::Loss => "loss",
            AxisParam::Rounds => "n",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.key() == key)
    }

    /// Writes one grid value into `params`.
    pub fn set(&self, params: &mut ExperimentParams, value: f64) {
        match self {
            AxisParam::Theta => params.theta_rad = value,
            AxisParam::Beta => params.beta_rad = value,
            AxisParam::Loss => params.loss_l = value,
            AxisParam::Rounds => params.rounds = Rounds::Finite(value as u64),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Linear { start: f64, stop: f64, count: usize },
    Log { start: f64, stop: f64, count: usize },
    Values(Vec<f64>),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Linear { count, .. } | Grid::Log { count, .. } => *count,
            Grid::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<f64> {
        let frac = |i: usize, count: usize| {
            if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            }
        };
        match self {
            Grid::Linear { start, stop, count } => (0..*count)
                .map(|i| start + (stop - start) * frac(i, *count))
                .collect(),
            Grid::Log { start, stop, count } => {
                let (a, b) = (start.ln(), stop.ln());
                (0..*count)
                    .map(|i| (a + (b - a) * frac(i, *count)).exp())
                    .collect()
            }
            Grid::Values(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub param: AxisParam,
    pub grid: Grid,
}

impl Axis {
    /// Grid points; the `n` axis is rounded to integers.
    pub fn points(&self) -> Vec<f64> {
        let pts = self.grid.points();
        match self.param {
            AxisParam::Rounds => pts.into_iter().map(f64::round).collect(),
            _ => pts,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(ConfigError::validation(
                "format",
                format!("unknown format {other:?} (csv or json)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// Fixed parameters; swept axes overwrite their field per grid point.
    pub base: ExperimentParams,
    /// Swept axes in canonical order.
    pub axes: Vec<Axis>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

impl SweepSpec {
    pub fn single(base: ExperimentParams) -> Self {
        SweepSpec {
            base,
            axes: Vec::new(),
            output_path: None,
            output_format: OutputFormat::Csv,
            trials: None,
            seed: None,
        }
    }

    pub fn row_count(&self) -> usize {
        self.axes.iter().map(|a| a.grid.len()).product()
    }

    /// Every grid point, row-major with the first axis outermost.
    pub fn grid_points(&self) -> Vec<ExperimentParams> {
        let mut out = vec![self.base];
        for axis in &self.axes {
            let pts = axis.points();
            out = out
                .into_iter()
                .flat_map(|p| {
                    pts.iter().map(move |&v| {
                        let mut q = p;
                        axis.param.set(&mut q, v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base
            .validate()
            .map_err(|e| ConfigError::from_param_error(&e))?;
        if self.axes.len() > MAX_SWEPT_AXES {
            return Err(ConfigError::validation(
                "sweep",
                format!(
                    "at most {MAX_SWEPT_AXES} swept axes per run, got {}",
                    self.axes.len()
                ),
            ));
        }
        for axis in &self.axes {
            validate_axis(axis)?;
        }
        if self.trials.is_some_and(|t| t < 2) {
            return Err(ConfigError::validation(
                "trials",
                "trials must be at least 2",
            ));
        }
        Ok(())
    }
}

fn validate_axis(axis: &Axis) -> Result<(), ConfigError> {
    let field = axis.param.key();
    if axis.grid.is_empty() {
        return Err(ConfigError::validation(
            field,
            "grid must have at least one point",
        ));
    }
    if let Grid::Log { start, stop, .. } = axis.grid {
        if !(start > 0.0 && stop > 0.0) {
            return Err(ConfigError::validation(
                field,
                "log spacing needs positive start and stop",
            ));
        }
    }
    if let Grid::Linear { start, stop, .. } | Grid::Log { start, stop, .. } = axis.grid {
        if !(start.is_finite() && stop.is_finite()) {
            return Err(ConfigError::validation(
                field,
                "start and stop must be finite",
            ));
        }
    }
    for v in axis.grid.points() {
        match axis.param {
            AxisParam::Theta | AxisParam::Beta if !v.is_finite() => {
                return Err(ConfigError::validation(field, "grid values must be finite"))
            }
            AxisParam::Loss if !(0.0..1.0).contains(&v) => {
                return Err(ConfigError::validation("loss_L", "loss_L must be in [0,1)"))
            }
            AxisParam::Rounds if !(v >= 1.0 && v.is_finite()) => {
                return Err(ConfigError::validation(
                    "rounds_n",
                    "n grid values must be >= 1",
                ))
            }
            AxisParam::Rounds if matches!(axis.grid, Grid::Values(_)) && v.fract() != 0.0 => {
                return Err(ConfigError::validation(
                    "rounds_n",
                    "n values must be integers",
                ))
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scheme: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    photons: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rounds: Option<RawRounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sweep: BTreeMap<String, RawAxis>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
enum RawRounds {
    Count(u64),
    Text(String),
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spacing: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a config file, applying defaults (L = 0, ε = 0,
/// N = 10⁶, n = ∞).
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;

    let scheme: Scheme = raw
        .scheme
        .parse()
        .map_err(|e| ConfigError::from_param_error(&e))?;

    let mut axes = Vec::new();
    for (key, ax) in raw.sweep {
        let param = AxisParam::from_key(&key).ok_or_else(|| {
            ConfigError::validation(
                "sweep",
                format!("unknown axis {key:?} (theta, beta, loss or n)"),
            )
        })?;
        axes.push(Axis {
            param,
            grid: raw_axis_to_grid(param, ax)?,
        });
    }
    axes.sort_by_key(|a| a.param);

    let first_point = |param: AxisParam| {
        axes.iter()
            .find(|a| a.param == param)
            .and_then(|a| a.points().first().copied())
    };
    let theta = raw
        .theta
        .or_else(|| first_point(AxisParam::Theta))
        .ok_or_else(|| ConfigError::validation("theta", "theta is required unless swept"))?;
    let beta = raw
        .beta
        .or_else(|| first_point(AxisParam::Beta))
        .ok_or_else(|| ConfigError::validation("beta", "beta is required unless swept"))?;

    let rounds = match raw.rounds {
        None => Rounds::Infinite,
        Some(RawRounds::Count(n)) => Rounds::Finite(n),
        Some(RawRounds::Text(s)) => s.parse().map_err(|e| ConfigError::from_param_error(&e))?,
    };

    let mut base = ExperimentParams::new(scheme, theta, beta).with_rounds(rounds);
    if let Some(l) = raw.loss {
        base.loss_l = l;
    }
    if let Some(e) = raw.epsilon {
        base.epsilon_rad = e;
    }
    if let Some(n) = raw.photons {
        base.photons_n = n;
    }

    let spec = SweepSpec {
        base,
        axes,
        output_path: raw.output.map(PathBuf::from),
        output_format: raw.format.unwrap_or_default(),
        trials: raw.trials.map(|t| t as usize),
        seed: raw.seed,
    };
    spec.validate()?;
    Ok(spec)
}

fn raw_axis_to_grid(param: AxisParam, ax: RawAxis) -> Result<Grid, ConfigError> {
    let field = param.key();
    if let Some(values) = ax.values {
        if ax.start.is_some() || ax.stop.is_some() || ax.count.is_some() || ax.spacing.is_some() {
            return Err(ConfigError::validation(
                field,
                "give either values or start/stop/count, not both",
            ));
        }
        return Ok(Grid::Values(values));
    }
    let (Some(start), Some(stop), Some(count)) = (ax.start, ax.stop, ax.count) else {
        return Err(ConfigError::validation(
            field,
            "axis needs values or start, stop and count",
        ));
    };
    match ax.spacing.as_deref().unwrap_or("linear") {
        "linear" => Ok(Grid::Linear { start, stop, count }),
        "log" => Ok(Grid::Log { start, stop, count }),
        other => Err(ConfigError::validation(
            field,
            format!("unknown spacing {other:?} (linear or log)"),
        )),
    }
}

/// Inverse of [`parse_config`] for validated specs.
pub fn render(spec: &SweepSpec) -> String {
    let b = &spec.base;
    let raw = RawConfig {
        scheme: b.scheme.as_str().to_string(),
        theta: Some(b.theta_rad),
        beta: Some(b.beta_rad),
        loss: Some(b.loss_l),
        epsilon: Some(b.epsilon_rad),
        photons: Some(b.photons_n),
        rounds: Some(match b.rounds {
            Rounds::Finite(n) => RawRounds::Count(n),
            Rounds::Infinite => RawRounds::Text("inf".into()),
        }),
        output: spec
            .output_path
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned()),
        format: Some(spec.output_format),
        trials: spec.trials.map(|t| t as u64),
        seed: spec.seed,
        sweep: spec
            .axes
            .iter()
            .map(|a| {
                let raw = match &a.grid {
                    Grid::Linear { start, stop, count } => RawAxis {
                        start: Some(*start),
                        stop: Some(*stop),
                        count: Some(*count),
                        spacing: Some("linear".into()),
                        values: None,
                    },
                    Grid::Log { start, stop, count } => RawAxis {
                        start: Some(*start),
                        stop: Some(*stop),
                        count: Some(*count),
                        spacing: Some("log".into()),
                        values: None,
                    },
                    Grid::Values(v) => RawAxis {
                        values: Some(v.clone()),
                        ..RawAxis::default()
                    },
                };
                (a.param.key().to_string(), raw)
            })
            .collect(),
    };
    toml::to_string(&raw).expect("config is always representable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = parse_config("scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\n").unwrap();
        assert_eq!(spec.base, ExperimentParams::new(Scheme::SchemeI, 0.1, 0.2));
        assert_eq!(spec.base.loss_l, 0.0);
        assert_eq!(spec.base.epsilon_rad, 0.0);
        assert_eq!(spec.base.photons_n, 1e6);
        assert_eq!(spec.base.rounds, Rounds::Infinite);
        assert!(spec.axes.is_empty());
        assert_eq!(spec.row_count(), 1);
    }

    #[test]
    fn loss_out_of_range() {
        let err = parse_config("scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\nloss = 1.2\n")
            .unwrap_err();
        assert!(matches!(err, ConfigError::Validation { .. }));
        assert!(err.to_string().contains("loss_L must be in [0,1)"), "{err}");
    }

    #[test]
    fn two_axis_grid() {
        let text = r#"
scheme = "scheme1"

[sweep.beta]
start = 0.05
stop = 0.5
count = 50

[sweep.theta]
start = 0.001
stop = 0.1
count = 50
"#;
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.row_count(), 2500);
        let pts = spec.grid_points();
        assert_eq!(pts.len(), 2500);
        // theta outermost
        assert_eq!(pts[0].theta_rad, 0.001);
        assert_eq!(pts[1].theta_rad, 0.001);
        assert!((pts[1].beta_rad - (0.05 + 0.45 / 49.0)).abs() < 1e-15);
        assert!((pts[50].theta_rad - (0.001 + 0.099 / 49.0)).abs() < 1e-15);
        assert_eq!(pts[2499].beta_rad, 0.5);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("scheme = \"scheme1\"\ntheta = 0.1\nbeta = = 0.2\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let err =
            parse_config("scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn validation_errors_name_the_field() {
        let cases = [
            ("scheme = \"scheme9\"\ntheta = 0.1\nbeta = 0.2\n", "scheme"),
            ("scheme = \"scheme1\"\nbeta = 0.2\n", "theta"),
            ("scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\nphotons = -1\n", "photons_N"),
            ("scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\nrounds = 0\n", "rounds_n"),
            ("scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\ntrials = 1\n", "trials"),
            (
                "scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\n[sweep.loss]\nvalues = [0.0, 1.0]\n",
                "loss_L",
            ),
            (
                "scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\n[sweep.beta]\nstart = 0.0\nstop = 1.0\ncount = 3\nspacing = \"log\"\n",
                "beta",
            ),
            (
                "scheme = \"scheme1\"\n[sweep.beta]\nvalues=[0.1]\n[sweep.theta]\nvalues=[0.1]\n[sweep.n]\nvalues=[1]\n",
                "sweep",
            ),
        ];
        for (text, field) in cases {
            match parse_config(text) {
                Err(ConfigError::Validation { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn rounds_accepts_inf_and_integers() {
        let s = parse_config("scheme = \"scheme2\"\ntheta = 0.1\nbeta = 0.2\nrounds = 100000\n")
            .unwrap();
        assert_eq!(s.base.rounds, Rounds::Finite(100_000));
        let s = parse_config("scheme = \"scheme2\"\ntheta = 0.1\nbeta = 0.2\nrounds = \"inf\"\n")
            .unwrap();
        assert_eq!(s.base.rounds, Rounds::Infinite);
    }

    #[test]
    fn log_and_rounds_axes() {
        let text = "scheme = \"scheme1\"\ntheta = 0.1\nbeta = 0.2\n[sweep.n]\nstart = 1\nstop = 1000\ncount = 4\nspacing = \"log\"\n";
        let spec = parse_config(text).unwrap();
        let ns: Vec<Rounds> = spec.grid_points().iter().map(|p| p.rounds).collect();
        assert_eq!(
            ns,
            vec![
                Rounds::Finite(1),
                Rounds::Finite(10),
                Rounds::Finite(100),
                Rounds::Finite(1000)
            ]
        );
    }

    fn finite_grid() -> impl Strategy<Value = Grid> {
        prop_oneof![
            (0.001f64..1.0, 1.0f64..3.0, 1usize..60)
                .prop_map(|(start, stop, count)| Grid::Linear { start, stop, count }),
            (0.001f64..1.0, 1.0f64..3.0, 1usize..60).prop_map(|(start, stop, count)| Grid::Log {
                start,
                stop,
                count
            }),
            prop::collection::vec(0.0f64..3.0, 1..8).prop_map(Grid::Values),
        ]
    }

    fn spec_strategy() -> impl Strategy<Value = SweepSpec> {
        (
            prop_oneof![
                Just(Scheme::NoRecycle),
                Just(Scheme::SchemeI),
                Just(Scheme::SchemeII)
            ],
            -3.0f64..3.0,
            -3.0f64..3.0,
            0.0f64..0.99,
            -7.0f64..7.0,
            1.0f64..1e12,
            prop_oneof![
                Just(Rounds::Infinite),
                (1u64..1_000_000).prop_map(Rounds::Finite)
            ],
            prop::option::of(finite_grid()),
            prop::option::of(finite_grid()),
            prop::option::of(2usize..100_000),
            prop::option::of(0u64..(i64::MAX as u64)),
            any::<bool>(),
        )
            .prop_map(
                |(
                    scheme,
                    theta,
                    beta,
                    loss,
                    eps,
                    photons,
                    rounds,
                    g_theta,
                    g_beta,
                    trials,
                    seed,
                    json,
                )| {
                    let mut axes = Vec::new();
                    if let Some(grid) = g_theta {
                        axes.push(Axis {
                            param: AxisParam::Theta,
                            grid,
                        });
                    }
                    if let Some(grid) = g_beta {
                        axes.push(Axis {
                            param: AxisParam::Beta,
                            grid,
                        });
                    }
                    SweepSpec {
                        base: ExperimentParams::new(scheme, theta, beta)
                            .with_loss(loss)
                            .with_epsilon(eps)
                            .with_photons(photons)
                            .with_rounds(rounds),
                        axes,
                        output_path: json.then(|| PathBuf::from("out/sweep.json")),
                        output_format: if json {
                            OutputFormat::Json
                        } else {
                            OutputFormat::Csv
                        },
                        trials,
                        seed,
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn render_round_trips(spec in spec_strategy()) {
            let text = render(&spec);
            let back = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(back, spec);
        }
    }
}
