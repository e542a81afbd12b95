//! Monte Carlo experiment drivers.
//!
//! A run evaluates every trial independently on a worker pool, merges the
//! rows in trial order, and folds them into a report. Reports are pure
//! functions of `(config, records)`, so a persisted record file can always be
//! re-folded into the same report.

pub mod folds;
pub mod records;
pub mod tail_folds;
pub mod trial;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, RecordFormat};
use crate::error::{Error, Result};

pub use folds::{BoundsReport, Check, NnsReport, Theorem1Report, ValueAReport};
pub use records::{TailRecord, TrialRecord};
pub use tail_folds::{ConditionY, MomentGrowth, PointwiseCdf, TailsReport};
pub use trial::{TailContext, TailLaw, VerifyContext};

/// Runs `trial(0..trials)` on `workers` threads and concatenates the rows in
/// trial order, independent of scheduling.
pub fn run_trials<T, F>(trials: usize, workers: usize, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Vec<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(format!("worker pool: {e}")))?;
    let per_trial: Vec<Vec<T>> = pool.install(|| (0..trials as u64).into_par_iter().map(&trial).collect());
    Ok(per_trial.into_iter().flatten().collect())
}

/// Experiments a `verify` run performs; `theorem1` when none are listed.
pub fn verify_kinds(config: &ExperimentConfig) -> Vec<ExperimentKind> {
    if config.experiments.is_empty() {
        vec![ExperimentKind::Theorem1]
    } else {
        config.experiments.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub experiments: Vec<ExperimentKind>,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem1: Option<Theorem1Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_a: Option<ValueAReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nns: Option<NnsReport>,
    pub pass: bool,
}

/// Pure fold of a `verify` record stream.
pub fn fold_verify(config: &ExperimentConfig, records: &[TrialRecord]) -> VerifyReport {
    let kinds = verify_kinds(config);
    let has = |k| kinds.contains(&k);
    let theorem1 = has(ExperimentKind::Theorem1).then(|| folds::fold_theorem1(config, records));
    let value_a = has(ExperimentKind::ValueA).then(|| folds::fold_value_a(config, records));
    let bounds = has(ExperimentKind::Bounds).then(|| folds::fold_bounds(config, records));
    let nns = has(ExperimentKind::Nns).then(|| folds::fold_nns(config, records));
    let pass = theorem1.as_ref().is_none_or(|r| r.pass)
        && value_a.as_ref().is_none_or(|r| r.pass)
        && bounds.as_ref().is_none_or(|r| r.pass)
        && nns.as_ref().is_none_or(|r| r.pass);
    VerifyReport {
        command: "verify",
        version: crate::VERSION,
        seed: config.seed,
        trials: config.trials,
        experiments: kinds,
        config: config.clone(),
        theorem1,
        value_a,
        bounds,
        nns,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailsRunReport {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub config: ExperimentConfig,
    #[serde(flatten)]
    pub report: TailsReport,
}

/// Pure fold of a `tails` record stream.
pub fn fold_tails(config: &ExperimentConfig, records: &[TailRecord]) -> TailsRunReport {
    TailsRunReport {
        command: "tails",
        version: crate::VERSION,
        seed: config.seed,
        trials: config.trials,
        config: config.clone(),
        report: tail_folds::fold_tails(config, records),
    }
}

pub fn run_verify(config: &ExperimentConfig, workers: usize) -> Result<(Vec<TrialRecord>, VerifyReport)> {
    let mut config = config.clone();
    config.experiments = verify_kinds(&config);
    let ctx = VerifyContext::new(&config)?;
    let records = run_trials(config.trials, workers, |t| ctx.run_trial(t))?;
    let report = fold_verify(&config, &records);
    Ok((records, report))
}

pub fn run_tails(config: &ExperimentConfig, workers: usize) -> Result<(Vec<TailRecord>, TailsRunReport)> {
    let ctx = TailContext::new(config)?;
    let records = run_trials(config.trials, workers, |t| ctx.run_trial(t))?;
    let report = fold_tails(config, &records);
    Ok((records, report))
}

fn single(config: &ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig {
    let mut c = config.clone();
    c.experiments = vec![kind];
    c
}

fn default_workers() -> usize {
    crate::config::WorkerCount::Auto.resolve()
}

pub fn run_theorem1(config: &ExperimentConfig) -> Result<(Theorem1Report, Vec<TrialRecord>)> {
    let (records, report) = run_verify(&single(config, ExperimentKind::Theorem1), default_workers())?;
    Ok((report.theorem1.expect("theorem1 requested"), records))
}

pub fn run_value_a(config: &ExperimentConfig) -> Result<ValueAReport> {
    let (_, report) = run_verify(&single(config, ExperimentKind::ValueA), default_workers())?;
    Ok(report.value_a.expect("value_a requested"))
}

pub fn run_bounds_suite(config: &ExperimentConfig) -> Result<BoundsReport> {
    let (_, report) = run_verify(&single(config, ExperimentKind::Bounds), default_workers())?;
    Ok(report.bounds.expect("bounds requested"))
}

pub fn run_nns_derivative_check(config: &ExperimentConfig) -> Result<NnsReport> {
    let (_, report) = run_verify(&single(config, ExperimentKind::Nns), default_workers())?;
    Ok(report.nns.expect("nns requested"))
}

pub fn run_tail_estimates(config: &ExperimentConfig) -> Result<TailsReport> {
    Ok(run_tails(&single(config, ExperimentKind::TailEstimates), default_workers())?.1.report)
}

/// `E exp(A X_r^B)` per radius with the given exponents.
pub fn run_condition_y(config: &ExperimentConfig, a: f64, b: f64) -> Result<Vec<ConditionY>> {
    let mut c = single(config, ExperimentKind::ConditionY);
    c.constants.a = a;
    c.constants.b = b;
    let report = run_tails(&c, default_workers())?.1.report;
    Ok(report.per_radius.into_iter().filter_map(|r| r.condition_y).collect())
}

pub fn run_gaussian_pointwise_cdf(config: &ExperimentConfig) -> Result<Vec<PointwiseCdf>> {
    let report = run_tails(&single(config, ExperimentKind::GaussianCdf), default_workers())?.1.report;
    Ok(report.per_radius.into_iter().filter_map(|r| r.gaussian_cdf).collect())
}

pub fn run_moment_growth(config: &ExperimentConfig, p_grid: &[f64]) -> Result<Vec<MomentGrowth>> {
    let mut c = single(config, ExperimentKind::MomentGrowth);
    c.tails.p_grid = p_grid.to_vec();
    let report = run_tails(&c, default_workers())?.1.report;
    Ok(report.per_radius.into_iter().filter_map(|r| r.moment_growth).collect())
}

/// Paths written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub records: PathBuf,
    pub report: PathBuf,
}

impl Artifacts {
    pub fn verify(dir: &Path, format: RecordFormat) -> Self {
        Artifacts { records: dir.join(format!("records.{}", format.extension())), report: dir.join("report.json") }
    }

    pub fn tails(dir: &Path, format: RecordFormat) -> Self {
        Artifacts { records: dir.join(format!("tail_records.{}", format.extension())), report: dir.join("tail_report.json") }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_verify(dir: &Path, format: RecordFormat, config: &ExperimentConfig, records: &[TrialRecord], report: &VerifyReport) -> Result<Artifacts> {
    let paths = Artifacts::verify(dir, format);
    records::write_trial_records(create(&paths.records)?, records, config.target_values.len(), format)?;
    write_report(&paths.report, report)?;
    Ok(paths)
}

pub fn write_tails(dir: &Path, format: RecordFormat, config: &ExperimentConfig, records: &[TailRecord], report: &TailsRunReport) -> Result<Artifacts> {
    let paths = Artifacts::tails(dir, format);
    let p_grid: &[f64] = if records.iter().any(|r| r.values.as_ref().is_some_and(|v| !v.moments.is_empty())) { &config.tails.p_grid } else { &[] };
    records::write_tail_records(create(&paths.records)?, records, p_grid, format)?;
    write_report(&paths.report, report)?;
    Ok(paths)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_trial_file(path: &Path, format: RecordFormat) -> Result<Vec<TrialRecord>> {
    records::read_trial_records(open(path)?, format)
}

pub fn read_tail_file(path: &Path, format: RecordFormat) -> Result<Vec<TailRecord>> {
    records::read_tail_records(open(path)?, format)
}
