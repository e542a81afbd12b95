//! Aggregates of the `verify` record stream. Every function here is a pure
//! fold over `(config, records)`.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::stats::{binomial_se, median, nonincreasing_within, quantile};

use super::records::{TrialRecord, TrialValues};

/// A named pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, pass: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, pass: value >= limit }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: ok as u8 as f64, limit: 1.0, pass: ok }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Successful rows at grid radius `r`.
fn rows_at(records: &[TrialRecord], r: f64) -> Vec<&TrialValues> {
    records.iter().filter(|rec| rec.r == r).filter_map(|rec| rec.values.as_ref()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureSummary {
    pub rows: usize,
    pub failed_rows: usize,
    pub failed_trials: usize,
    pub rate: f64,
    pub causes: Vec<String>,
}

pub fn failure_summary<'a>(rows: impl Iterator<Item = (u64, Option<&'a String>)>) -> FailureSummary {
    let mut total = 0;
    let mut failed = 0;
    let mut trials = std::collections::BTreeSet::new();
    let mut all_trials = std::collections::BTreeSet::new();
    let mut causes = std::collections::BTreeSet::new();
    for (trial, failure) in rows {
        total += 1;
        all_trials.insert(trial);
        if let Some(f) = failure {
            failed += 1;
            trials.insert(trial);
            causes.insert(f.split(':').next().unwrap_or("").to_string());
        }
    }
    FailureSummary {
        rows: total,
        failed_rows: failed,
        failed_trials: trials.len(),
        rate: if all_trials.is_empty() { 0.0 } else { trials.len() as f64 / all_trials.len() as f64 },
        causes: causes.into_iter().collect(),
    }
}

fn trial_failures(records: &[TrialRecord]) -> FailureSummary {
    failure_summary(records.iter().map(|r| (r.trial_index, r.failure.as_ref())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Self {
        Distribution {
            count: values.len(),
            min: quantile(values, 0.0),
            q25: quantile(values, 0.25),
            median: quantile(values, 0.5),
            q75: quantile(values, 0.75),
            max: quantile(values, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Radius {
    pub r: f64,
    pub trials: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    pub standard_error: f64,
    pub band: f64,
    pub median_deviation: f64,
    pub median_jensen_deviation: f64,
    pub median_ratio: f64,
    pub p95_ratio: f64,
    pub median_n_over_r: f64,
    pub median_abs_n_over_r_minus_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub band_factor: f64,
    pub per_radius: Vec<Theorem1Radius>,
    /// Distribution over trials that reached a threshold inside the grid.
    pub threshold_radius_estimate: Distribution,
    pub threshold_not_reached: usize,
    pub failures: FailureSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn fold_theorem1(config: &ExperimentConfig, records: &[TrialRecord]) -> Theorem1Report {
    let t = &config.thresholds;
    let per_radius: Vec<Theorem1Radius> = config
        .radii
        .iter()
        .map(|&r| {
            let rows = rows_at(records, r);
            let n = rows.len();
            let violations = rows.iter().filter(|v| v.violated).count();
            let p = if n == 0 { f64::NAN } else { violations as f64 / n as f64 };
            let ratios: Vec<f64> = rows.iter().map(|v| v.deviation / v.band).collect();
            let n_over_r: Vec<f64> = rows.iter().map(|v| v.counting_n_zero / v.r_eval).collect();
            Theorem1Radius {
                r,
                trials: n,
                violations,
                violation_fraction: p,
                standard_error: binomial_se(p, n),
                band: median(&rows.iter().map(|v| v.band).collect::<Vec<_>>()),
                median_deviation: median(&rows.iter().map(|v| v.deviation).collect::<Vec<_>>()),
                median_jensen_deviation: median(&rows.iter().map(|v| v.jensen_deviation).collect::<Vec<_>>()),
                median_ratio: median(&ratios),
                p95_ratio: quantile(&ratios, 0.95),
                median_n_over_r: median(&n_over_r),
                median_abs_n_over_r_minus_1: median(&n_over_r.iter().map(|x| (x - 1.0).abs()).collect::<Vec<_>>()),
            }
        })
        .collect();

    let first_rows = rows_at(records, config.radii[0]);
    let mut thresholds = Vec::new();
    let mut not_reached = 0;
    for v in &first_rows {
        match v.threshold_radius_estimate {
            Some(x) => thresholds.push(x),
            None => not_reached += 1,
        }
    }

    let failures = trial_failures(records);
    let mut checks = vec![Check::at_most("failure_rate", failures.rate, t.max_failure_rate)];
    let fractions: Vec<f64> = per_radius.iter().map(|p| p.violation_fraction).collect();
    let n_min = per_radius.iter().map(|p| p.trials).min().unwrap_or(0);
    checks.push(Check::holds("violation_fraction_nonincreasing", nonincreasing_within(&fractions, n_min, t.standard_errors)));
    if let (Some(limit), Some(last)) = (t.max_violation_fraction, per_radius.last()) {
        checks.push(Check::at_most(format!("violation_fraction_at_r={}", last.r), last.violation_fraction, limit));
    }
    if let (Some(r0), Some([lo, hi])) = (t.n_over_r_radius, t.n_over_r_range) {
        match per_radius.iter().find(|p| p.r == r0) {
            Some(p) => {
                checks.push(Check::at_least(format!("median_n_over_r_at_r={r0}_low"), p.median_n_over_r, lo));
                checks.push(Check::at_most(format!("median_n_over_r_at_r={r0}_high"), p.median_n_over_r, hi));
            }
            None => checks.push(Check::holds(format!("n_over_r_radius_{r0}_in_grid"), false)),
        }
        let dev: Vec<f64> = per_radius.iter().map(|p| p.median_abs_n_over_r_minus_1).collect();
        checks.push(Check::holds("median_abs_n_over_r_minus_1_decreasing", dev.windows(2).all(|w| w[1] < w[0])));
    }
    let pass = all_pass(&checks);
    Theorem1Report {
        band_factor: config.constants.band_factor(),
        per_radius,
        threshold_radius_estimate: Distribution::of(&thresholds),
        threshold_not_reached: not_reached,
        failures,
        checks,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueARadius {
    pub r: f64,
    pub trials: usize,
    pub violation_fraction: f64,
    pub standard_error: f64,
    pub band_a: f64,
    pub median_deviation_a: f64,
    pub median_n_a_over_n_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueATarget {
    pub a: [f64; 2],
    pub abs_a: f64,
    pub per_radius: Vec<ValueARadius>,
    pub threshold_radius: Distribution,
    pub threshold_not_reached: usize,
    /// Median threshold with unreached trials counted as `+∞`.
    pub median_threshold_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueAReport {
    pub delta: f64,
    pub targets: Vec<ValueATarget>,
    /// Whether the median threshold radius is nondecreasing in `|a|` across targets.
    pub threshold_nondecreasing_in_abs_a: bool,
    pub failures: FailureSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn fold_value_a(config: &ExperimentConfig, records: &[TrialRecord]) -> ValueAReport {
    let targets: Vec<ValueATarget> = config
        .target_values
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let per_radius = config
                .radii
                .iter()
                .map(|&r| {
                    let rows = rows_at(records, r);
                    let n = rows.len();
                    let viol = rows.iter().filter(|v| v.targets[k].violated_a).count();
                    let p = if n == 0 { f64::NAN } else { viol as f64 / n as f64 };
                    ValueARadius {
                        r,
                        trials: n,
                        violation_fraction: p,
                        standard_error: binomial_se(p, n),
                        band_a: median(&rows.iter().map(|v| v.band_a).collect::<Vec<_>>()),
                        median_deviation_a: median(&rows.iter().map(|v| v.targets[k].deviation_a).collect::<Vec<_>>()),
                        median_n_a_over_n_zero: median(&rows.iter().map(|v| v.targets[k].counting_n_a / v.counting_n_zero).collect::<Vec<_>>()),
                    }
                })
                .collect();
            let first = rows_at(records, config.radii[0]);
            let reached: Vec<f64> = first.iter().filter_map(|v| v.targets[k].threshold_radius_a).collect();
            let with_inf: Vec<f64> = first.iter().map(|v| v.targets[k].threshold_radius_a.unwrap_or(f64::INFINITY)).collect();
            ValueATarget {
                a,
                abs_a: a[0].hypot(a[1]),
                per_radius,
                threshold_radius: Distribution::of(&reached),
                threshold_not_reached: first.len() - reached.len(),
                median_threshold_radius: median(&with_inf),
            }
        })
        .collect();

    let mut by_abs: Vec<(f64, f64)> = targets.iter().map(|t| (t.abs_a, t.median_threshold_radius)).collect();
    by_abs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let trend = by_abs.windows(2).all(|w| w[1].1 >= w[0].1);

    let failures = trial_failures(records);
    let mut checks = vec![Check::at_most("failure_rate", failures.rate, config.thresholds.max_failure_rate)];
    let band_limit = config.thresholds.value_a_band_max_abs.unwrap_or(f64::INFINITY);
    for t in targets.iter().filter(|t| t.abs_a <= band_limit) {
        if let Some(last) = t.per_radius.last() {
            checks.push(Check::at_most(format!("median_deviation_a_le_band_a[a={},{}]", t.a[0], t.a[1]), last.median_deviation_a, last.band_a));
        }
    }
    if config.thresholds.value_a_threshold_trend {
        checks.push(Check::holds("threshold_radius_nondecreasing_in_abs_a", trend));
    }
    let pass = all_pass(&checks);
    ValueAReport { delta: config.constants.delta, targets, threshold_nondecreasing_in_abs_a: trend, failures, checks, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackStats {
    pub applicable: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    pub median_slack: f64,
    pub min_slack: f64,
}

impl SlackStats {
    fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.flatten().collect();
        let violations = v.iter().filter(|s| **s < 0.0).count();
        SlackStats {
            applicable: v.len(),
            violations,
            violation_fraction: if v.is_empty() { f64::NAN } else { violations as f64 / v.len() as f64 },
            median_slack: median(&v),
            min_slack: quantile(&v, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRadius {
    pub r: f64,
    pub log_sigma_f: f64,
    #[serde(rename = "log_M_f")]
    pub log_m_f: f64,
    #[serde(rename = "T_f")]
    pub t_f: Option<f64>,
    /// `log σ + ½log2 − T` for the base; `None` where `σ(r,f) < 1`.
    pub lem3_f_slack: Option<f64>,
    #[serde(rename = "sigma_le_M_slack")]
    pub sigma_le_m_slack: f64,
    /// Measured `O(1)` of `log M ≤ log σ + log log σ + O(1)`.
    pub maxlem_slack: Option<f64>,
    pub lem3_omega: SlackStats,
    pub lem6: SlackStats,
    pub cor1_f: SlackStats,
    pub cor1_omega: SlackStats,
    pub newcor3: SlackStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub per_radius: Vec<BoundsRadius>,
    /// Range of the `maxlem` slack over the upper half of the radii.
    pub maxlem_slack_variation: f64,
    pub failures: FailureSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn fold_bounds(config: &ExperimentConfig, records: &[TrialRecord]) -> BoundsReport {
    let t = &config.thresholds;
    let per_radius: Vec<BoundsRadius> = config
        .radii
        .iter()
        .map(|&r| {
            let rows = rows_at(records, r);
            // base columns are identical across unjittered rows
            let base = rows.iter().find(|v| v.r_eval == r).or(rows.first());
            BoundsRadius {
                r,
                log_sigma_f: base.map_or(f64::NAN, |v| v.log_sigma_f),
                log_m_f: base.map_or(f64::NAN, |v| v.log_m_f),
                t_f: base.and_then(|v| v.t_f),
                lem3_f_slack: base.and_then(|v| v.lem3_f_slack),
                sigma_le_m_slack: base.map_or(f64::NAN, |v| v.sigma_le_m_slack),
                maxlem_slack: base.and_then(|v| v.maxlem_slack),
                lem3_omega: SlackStats::of(rows.iter().map(|v| v.lem3_omega_slack)),
                lem6: SlackStats::of(rows.iter().map(|v| v.lem6_slack)),
                cor1_f: SlackStats::of(rows.iter().map(|v| v.cor1_f_slack)),
                cor1_omega: SlackStats::of(rows.iter().map(|v| v.cor1_omega_slack)),
                newcor3: SlackStats::of(rows.iter().map(|v| v.newcor3_slack)),
            }
        })
        .collect();

    let upper = &per_radius[per_radius.len() / 2..];
    let slacks: Vec<f64> = upper.iter().filter_map(|p| p.maxlem_slack).collect();
    let variation = if slacks.is_empty() { f64::NAN } else { quantile(&slacks, 1.0) - quantile(&slacks, 0.0) };

    let failures = trial_failures(records);
    let mut checks = vec![Check::at_most("failure_rate", failures.rate, t.max_failure_rate)];
    let min_lem3_f = per_radius.iter().filter_map(|p| p.lem3_f_slack).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("lem3_f_min_slack", min_lem3_f, -1e-7));
    let min_sigma_m = per_radius.iter().map(|p| p.sigma_le_m_slack).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("sigma_le_M_min_slack", min_sigma_m, -1e-12));
    checks.push(Check::at_most("maxlem_slack_variation", variation, t.maxlem_slack_variation));
    let min_lem3_omega = per_radius.iter().map(|p| p.lem3_omega.min_slack).fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("lem3_omega_min_slack", min_lem3_omega, -1e-7));
    if let Some(limit) = t.max_lem6_violation_fraction {
        let worst = per_radius.iter().map(|p| p.lem6.violation_fraction).fold(0.0, f64::max);
        checks.push(Check::at_most("lem6_max_violation_fraction", worst, limit));
    }
    let pass = all_pass(&checks);
    BoundsReport { per_radius, maxlem_slack_variation: variation, failures, checks, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NnsRadius {
    pub r: f64,
    pub s_r: f64,
    pub median_n_zero: f64,
    pub median_abs_n_minus_s: f64,
    pub median_relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NnsReport {
    pub per_radius: Vec<NnsRadius>,
    /// Smallest `γ ≥ 1/2` with `|n − s| ≤ 2 s^γ` on the upper half of the radii, per trial.
    pub gamma_hat: Distribution,
    /// Same fit without the `1/2` floor.
    pub gamma_raw: Distribution,
    pub failures: FailureSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Exponent needed at one radius: `log(|n − s|/2) / log s`.
fn gamma_needed(n: f64, s: f64) -> Option<f64> {
    let gap = (n - s).abs();
    (s > 1.0).then(|| if gap <= 0.0 { f64::NEG_INFINITY } else { (gap / 2.0).ln() / s.ln() })
}

pub fn fold_nns(config: &ExperimentConfig, records: &[TrialRecord]) -> NnsReport {
    let per_radius: Vec<NnsRadius> = config
        .radii
        .iter()
        .map(|&r| {
            let rows = rows_at(records, r);
            let gaps: Vec<f64> = rows.iter().map(|v| (v.n_zero as f64 - v.s_r).abs()).collect();
            NnsRadius {
                r,
                s_r: median(&rows.iter().map(|v| v.s_r).collect::<Vec<_>>()),
                median_n_zero: median(&rows.iter().map(|v| v.n_zero as f64).collect::<Vec<_>>()),
                median_abs_n_minus_s: median(&gaps),
                median_relative_gap: median(&rows.iter().zip(&gaps).map(|(v, g)| g / v.s_r).collect::<Vec<_>>()),
            }
        })
        .collect();

    let upper: Vec<f64> = config.radii[config.radii.len() / 2..].to_vec();
    let mut by_trial: std::collections::BTreeMap<u64, Vec<&TrialValues>> = Default::default();
    for rec in records.iter().filter(|rec| upper.contains(&rec.r)) {
        if let Some(v) = rec.values.as_ref() {
            by_trial.entry(rec.trial_index).or_default().push(v);
        }
    }
    let mut raw = Vec::new();
    for rows in by_trial.values() {
        let g = rows.iter().filter_map(|v| gamma_needed(v.n_zero as f64, v.s_r)).fold(f64::NEG_INFINITY, f64::max);
        if g.is_finite() {
            raw.push(g);
        } else if g == f64::NEG_INFINITY && !rows.is_empty() {
            raw.push(0.0);
        }
    }
    let floored: Vec<f64> = raw.iter().map(|g| g.max(0.5)).collect();

    let failures = trial_failures(records);
    let mut checks = vec![Check::at_most("failure_rate", failures.rate, config.thresholds.max_failure_rate)];
    checks.push(Check::at_least("gamma_hat_median", median(&floored), config.thresholds.min_gamma_median));
    let pass = all_pass(&checks);
    NnsReport { per_radius, gamma_hat: Distribution::of(&floored), gamma_raw: Distribution::of(&raw), failures, checks, pass }
}
