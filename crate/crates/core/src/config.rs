//! Run descriptions: TOML experiment configs and the resolved run manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::random::RandomModel;
use crate::series::{CoefficientSequence, TruncationPolicy};

/// Experiment folds a config can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Theorem1,
    ValueA,
    Bounds,
    Nns,
    TailEstimates,
    ConditionY,
    GaussianCdf,
    MomentGrowth,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Theorem1 => "theorem1",
            ExperimentKind::ValueA => "value_a",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Nns => "nns",
            ExperimentKind::TailEstimates => "tail_estimates",
            ExperimentKind::ConditionY => "condition_y",
            ExperimentKind::GaussianCdf => "gaussian_cdf",
            ExperimentKind::MomentGrowth => "moment_growth",
        }
    }

    /// Driven by `tails` (per-trial `X_r` samples) rather than `verify`.
    pub fn is_tail_family(self) -> bool {
        matches!(
            self,
            ExperimentKind::TailEstimates | ExperimentKind::ConditionY | ExperimentKind::GaussianCdf | ExperimentKind::MomentGrowth
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Rademacher tail constant (`A = ε` in the tail threshold).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Widening factor `1 + δ` standing in for `1 + o(1)` in the general-value band.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_tau() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    0.25
}

impl Constants {
    /// `(C/A)^{1/B}`.
    pub fn band_factor(&self) -> f64 {
        (self.c / self.a).powf(1.0 / self.b)
    }

    /// `(C/A)^{1/B} · x^{1/B}` for `x > 0`, else 0.
    pub fn band(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.band_factor() * x.powf(1.0 / self.b)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    #[default]
    Csv,
    Jsonl,
}

impl RecordFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RecordFormat::Csv => "csv",
            RecordFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for RecordFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(RecordFormat::Csv),
            "jsonl" => Ok(RecordFormat::Jsonl),
            other => Err(format!("unknown format '{other}' (expected csv or jsonl)")),
        }
    }
}

impl fmt::Display for RecordFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: RecordFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out"), format: RecordFormat::Csv }
    }
}

/// Pass/fail limits checked by `verify` and `tails`. Unset optional limits are reported, not checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub max_failure_rate: f64,
    /// Slack, in binomial standard errors, for monotonicity and tail checks.
    pub standard_errors: f64,
    /// Theorem-1 violation fraction allowed at the largest radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation_fraction: Option<f64>,
    /// Radius at which the median of `N(r,0)/r` is checked against `n_over_r_range`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_over_r_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_over_r_range: Option<[f64; 2]>,
    /// Allowed violation fraction of the `log σ(r, f_ω)` upper band, per radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lem6_violation_fraction: Option<f64>,
    /// Allowed range of the measured `O(1)` slack of `log M ≤ log σ + log log σ + O(1)` over the upper half of the radii.
    pub maxlem_slack_variation: f64,
    /// Targets with `|a|` at most this must meet the widened band (median) at the largest radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_a_band_max_abs: Option<f64>,
    /// Require the median threshold radius to be nondecreasing in `|a|`.
    pub value_a_threshold_trend: bool,
    pub min_gamma_median: f64,
    /// Condition-Y stability: largest share of the estimate carried by the top 1% of samples.
    pub max_top_share: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_failure_rate: 0.01,
            standard_errors: 3.0,
            max_violation_fraction: None,
            n_over_r_radius: None,
            n_over_r_range: None,
            max_lem6_violation_fraction: None,
            maxlem_slack_variation: 2.0,
            value_a_band_max_abs: None,
            value_a_threshold_trend: false,
            min_gamma_median: 0.45,
            max_top_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailSettings {
    /// Points `x > 1` at which tail probabilities are evaluated.
    pub x_grid: Vec<f64>,
    /// Angle of the pointwise `|log|f̂||` samples.
    pub theta: f64,
    pub p_grid: Vec<f64>,
    pub bootstrap_resamples: usize,
    pub confidence_level: f64,
}

impl Default for TailSettings {
    fn default() -> Self {
        TailSettings {
            x_grid: vec![1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0],
            theta: 0.0,
            p_grid: vec![1.0, 1.5, 2.0, 3.0, 4.0],
            bootstrap_resamples: 1000,
            confidence_level: 0.95,
        }
    }
}

/// Minimum trial count for the tail-family estimates.
pub const TAIL_TRIALS_FLOOR: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub radii: Vec<f64>,
    pub model: RandomModel,
    /// Values `a` as `[re, im]` pairs.
    #[serde(default)]
    pub target_values: Vec<[f64; 2]>,
    #[serde(default)]
    pub experiments: Vec<ExperimentKind>,
    pub base: CoefficientSequence,
    pub constants: Constants,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub tails: TailSettings,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn targets(&self) -> Vec<Complex64> {
        self.target_values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.last().copied().unwrap_or(f64::NAN)
    }

    /// Structural checks that do not need any series evaluation.
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return config_err("trials must be at least 1");
        }
        if self.radii.is_empty() {
            return config_err("radii must not be empty");
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return config_err("radii must be positive and finite");
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return config_err("radii must be strictly increasing");
        }
        let k = &self.constants;
        if !(k.c > 1.0) {
            return config_err(format!("C > 1 required, got C = {}", k.c));
        }
        if !(k.a > 0.0 && k.b > 0.0) {
            return config_err("A > 0 and B > 0 required");
        }
        if !(k.tau > 0.0 && k.epsilon > 0.0 && k.delta >= 0.0) {
            return config_err("tau > 0, epsilon > 0 and delta >= 0 required");
        }
        if [k.a, k.b, k.c, k.tau, k.epsilon, k.delta].iter().any(|v| !v.is_finite()) {
            return config_err("constants must be finite");
        }
        if self.target_values.iter().flatten().any(|v| !v.is_finite()) {
            return config_err("target_values must be finite");
        }
        self.base.validate()?;
        self.truncation.validate()?;
        self.quadrature.validate()?;
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.max_failure_rate) || !(t.standard_errors >= 0.0) {
            return config_err("thresholds.max_failure_rate must lie in [0, 1] and standard_errors must be nonnegative");
        }
        if let Some([lo, hi]) = t.n_over_r_range {
            if !(lo <= hi) {
                return config_err("thresholds.n_over_r_range must be [low, high] with low <= high");
            }
            if t.n_over_r_radius.is_none() {
                return config_err("thresholds.n_over_r_range needs n_over_r_radius");
            }
        }
        let tails = &self.tails;
        if tails.x_grid.is_empty() || tails.x_grid.iter().any(|x| !(x.is_finite() && *x > 1.0)) {
            return config_err("tails.x_grid must be nonempty with every x > 1");
        }
        if tails.x_grid.windows(2).any(|w| w[1] <= w[0]) {
            return config_err("tails.x_grid must be strictly increasing");
        }
        if tails.p_grid.iter().any(|p| !(1.0..=4.0).contains(p)) || tails.p_grid.windows(2).any(|w| w[1] <= w[0]) {
            return config_err("tails.p_grid must be strictly increasing within [1, 4]");
        }
        if !(tails.confidence_level > 0.0 && tails.confidence_level < 1.0) {
            return config_err("tails.confidence_level must lie in (0, 1)");
        }
        if !tails.theta.is_finite() {
            return config_err("tails.theta must be finite");
        }
        Ok(())
    }
}

/// Worker pool size: a fixed count or one per available core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WorkerCount {
    #[default]
    Auto,
    Fixed(usize),
}

impl WorkerCount {
    pub fn resolve(self) -> usize {
        match self {
            WorkerCount::Auto => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            WorkerCount::Fixed(n) => n,
        }
    }
}

impl FromStr for WorkerCount {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(WorkerCount::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(WorkerCount::Fixed(n)),
            _ => Err(format!("workers must be a positive integer or 'auto', got '{s}'")),
        }
    }
}

impl fmt::Display for WorkerCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkerCount::Auto => f.write_str("auto"),
            WorkerCount::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for WorkerCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A config resolved against command-line overrides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
    pub format: RecordFormat,
    pub workers: WorkerCount,
}

impl RunManifest {
    pub fn new(config: ExperimentConfig) -> Self {
        RunManifest {
            config_path: None,
            output_dir: config.output.dir.clone(),
            format: config.output.format,
            config,
            workers: WorkerCount::Auto,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut m = Self::new(ExperimentConfig::load(path)?);
        m.config_path = Some(path.to_path_buf());
        Ok(m)
    }

    /// Applies overrides; the echoed config reflects them.
    pub fn with_overrides(mut self, out: Option<PathBuf>, seed: Option<u64>, workers: Option<WorkerCount>, format: Option<RecordFormat>) -> Self {
        if let Some(dir) = out {
            self.output_dir = dir.clone();
            self.config.output.dir = dir;
        }
        if let Some(seed) = seed {
            self.config.seed = seed;
        }
        if let Some(w) = workers {
            self.workers = w;
        }
        if let Some(f) = format {
            self.format = f;
            self.config.output.format = f;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
trials = 20
radii = [5.0, 10.0]
model = "gaussian"
target_values = [[1.0, 0.0], [0.0, -2.5]]
experiments = ["theorem1", "value_a"]

[base]
kind = "exponential"

[constants]
A = 1.8181818181818181
B = 1.0
C = 1.2

[quadrature]
base_nodes = 128

[thresholds]
max_violation_fraction = 0.1
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.targets()[1], Complex64::new(0.0, -2.5));
        assert_eq!(cfg.constants.delta, 0.25);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn nested_base_round_trips() {
        let text = SAMPLE.replace("kind = \"exponential\"", "kind = \"star\"\nof = { kind = \"geometric-factorial\", c = 2.0, s = 1.5 }");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);
        let text = SAMPLE.replace("kind = \"exponential\"", "kind = \"explicit-list\"\ncoefficients = [[1.0, 0.0], [0.0, 2.0], [3.0, 0.0]]");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = SAMPLE.replace("trials = 20", "trials = 20\ntrails = 3");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config(_))));
        let text = SAMPLE.replace("C = 1.2", "C = 1.2\nD = 3.0");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn validation_failures() {
        let bad_c = SAMPLE.replace("C = 1.2", "C = 1.0");
        let err = ExperimentConfig::from_toml_str(&bad_c).unwrap_err();
        assert!(err.to_string().contains("C > 1 required"));
        let bad_radii = SAMPLE.replace("[5.0, 10.0]", "[10.0, 5.0]");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad_radii), Err(Error::InvalidInput(_))));
        let no_trials = SAMPLE.replace("trials = 20", "trials = 0");
        assert!(matches!(ExperimentConfig::from_toml_str(&no_trials), Err(Error::InvalidInput(_))));
        let bad_a = SAMPLE.replace("A = 1.8181818181818181", "A = 0.0");
        assert!(ExperimentConfig::from_toml_str(&bad_a).is_err());
    }

    #[test]
    fn worker_count_parsing() {
        assert_eq!("auto".parse::<WorkerCount>().unwrap(), WorkerCount::Auto);
        assert_eq!("3".parse::<WorkerCount>().unwrap(), WorkerCount::Fixed(3));
        assert!("0".parse::<WorkerCount>().is_err());
        assert!(WorkerCount::Auto.resolve() >= 1);
    }

    #[test]
    fn overrides_flow_into_echoed_config() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let m = RunManifest::new(cfg).with_overrides(Some("x".into()), Some(99), Some(WorkerCount::Fixed(2)), Some(RecordFormat::Jsonl));
        assert_eq!(m.config.seed, 99);
        assert_eq!(m.config.output.format, RecordFormat::Jsonl);
        assert_eq!(m.output_dir, PathBuf::from("x"));
    }
}
