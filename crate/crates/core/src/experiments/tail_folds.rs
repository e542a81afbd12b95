//! Aggregates of the `tails` record stream.

use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::random::mix_seed;
use crate::stats::{binomial_se, bootstrap_mean_ci, ks_critical_value, ks_statistic, mean, top_share, Interval};

use super::folds::{all_pass, failure_summary, Check, FailureSummary};
use super::records::{TailRecord, TailValues};
use super::trial::{tail_kinds, TailLaw};

/// Limit law of `|log|f̂_ω(re^{iθ})||` for Gaussian coefficients:
/// `F(x) = exp(−e^{−2x}) − exp(−e^{2x})` for `x ≥ 0`.
pub fn gaussian_abs_log_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-(-2.0 * x).exp()).exp() - (-(2.0 * x).exp()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub x: f64,
    pub threshold: f64,
    pub empirical_tail: f64,
    pub standard_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub law: TailLaw,
    /// Empirical `E exp(A X_r^B)` under the model's law.
    pub c1: f64,
    pub points: Vec<TailPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionY {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub estimate: f64,
    pub interval: Interval,
    pub top_1pct_share: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseCdf {
    pub theta: f64,
    pub samples: usize,
    pub ks_statistic: f64,
    pub ks_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub mean: f64,
    pub interval: Interval,
    /// `mean^{1/p}`, nondecreasing in `p` by the power-mean inequality.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentGrowth {
    pub moments: Vec<MomentEstimate>,
    pub raw_nondecreasing: bool,
    pub normalized_nondecreasing: bool,
    /// Smallest `C₀` compatible with `mean ≤ (C₀ p)^{6p}` on the grid.
    pub c0_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRadius {
    pub r: f64,
    pub log_sigma_f: f64,
    pub samples: usize,
    pub mean_x_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_estimates: Option<TailEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_y: Option<ConditionY>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_cdf: Option<PointwiseCdf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_growth: Option<MomentGrowth>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailsReport {
    pub model: String,
    pub experiments: Vec<ExperimentKind>,
    pub per_radius: Vec<TailRadius>,
    pub failures: FailureSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn tail_estimate(law: TailLaw, xs: &[f64], x_grid: &[f64]) -> TailEstimate {
    let n = xs.len();
    let c1 = mean(&xs.iter().map(|x| (law.a * x.powf(law.b)).exp()).collect::<Vec<_>>());
    let points = x_grid
        .iter()
        .map(|&x| {
            let threshold = law.threshold(x);
            let hits = xs.iter().filter(|v| **v >= threshold).count();
            let p = hits as f64 / n as f64;
            TailPoint { x, threshold, empirical_tail: p, standard_error: binomial_se(p, n), bound: c1 / x.powf(law.c) }
        })
        .collect();
    TailEstimate { law, c1, points }
}

fn condition_y(config: &ExperimentConfig, xs: &[f64], seed: u64) -> ConditionY {
    let (a, b) = (config.constants.a, config.constants.b);
    let values: Vec<f64> = xs.iter().map(|x| (a * x.powf(b)).exp()).collect();
    let share = top_share(&values, 0.01);
    ConditionY {
        a,
        b,
        estimate: mean(&values),
        interval: bootstrap_mean_ci(&values, config.tails.bootstrap_resamples, config.tails.confidence_level, seed),
        top_1pct_share: share,
        stable: share < 0.5,
    }
}

fn moment_growth(config: &ExperimentConfig, rows: &[&TailValues], seed: u64) -> MomentGrowth {
    let moments: Vec<MomentEstimate> = config
        .tails
        .p_grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let v: Vec<f64> = rows.iter().filter_map(|t| t.moments.get(i).copied()).collect();
            let m = mean(&v);
            MomentEstimate {
                p,
                mean: m,
                interval: bootstrap_mean_ci(&v, config.tails.bootstrap_resamples, config.tails.confidence_level, mix_seed(seed, i as u64)),
                normalized: m.powf(1.0 / p),
            }
        })
        .collect();
    let c0 = moments.iter().map(|m| m.mean.powf(1.0 / (6.0 * m.p)) / m.p).fold(0.0, f64::max);
    MomentGrowth {
        raw_nondecreasing: moments.windows(2).all(|w| w[1].mean >= w[0].mean),
        // relative slack for rounding in the Monte Carlo means
        normalized_nondecreasing: moments.windows(2).all(|w| w[1].normalized >= w[0].normalized * (1.0 - 1e-12)),
        c0_lower_bound: c0,
        moments,
    }
}

pub fn fold_tails(config: &ExperimentConfig, records: &[TailRecord]) -> TailsReport {
    let kinds = tail_kinds(config);
    let has = |k: ExperimentKind| kinds.contains(&k);
    let law = TailLaw::for_model(config.model, &config.constants);
    let failures = failure_summary(records.iter().map(|r| (r.trial_index, r.failure.as_ref())));
    let mut checks = vec![Check::at_most("failure_rate", failures.rate, config.thresholds.max_failure_rate)];
    let z = config.thresholds.standard_errors;

    let per_radius: Vec<TailRadius> = config
        .radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let rows: Vec<&TailValues> = records.iter().filter(|rec| rec.r == r).filter_map(|rec| rec.values.as_ref()).collect();
            let xs: Vec<f64> = rows.iter().filter_map(|v| v.x_r).collect();
            let log_sigma_f = rows.first().map_or(f64::NAN, |v| v.log_sigma_f);
            let seed = mix_seed(config.seed, 0x7A11 + k as u64);

            let tail_estimates = (has(ExperimentKind::TailEstimates) && !xs.is_empty()).then(|| tail_estimate(law, &xs, &config.tails.x_grid));
            if let Some(t) = &tail_estimates {
                for p in &t.points {
                    checks.push(Check::at_most(format!("tail_below_bound[r={r},x={}]", p.x), p.empirical_tail, p.bound + z * p.standard_error));
                }
                let tails: Vec<f64> = t.points.iter().map(|p| p.empirical_tail).collect();
                checks.push(Check::holds(format!("empirical_tail_nonincreasing[r={r}]"), tails.windows(2).all(|w| w[1] <= w[0])));
            }

            let condition_y = (has(ExperimentKind::ConditionY) && !xs.is_empty()).then(|| condition_y(config, &xs, seed));
            if let Some(c) = &condition_y {
                checks.push(Check::holds(format!("condition_y_finite[r={r}]"), c.estimate.is_finite() && c.interval.upper.is_finite()));
                checks.push(Check::at_most(format!("condition_y_top_1pct_share[r={r}]"), c.top_1pct_share, config.thresholds.max_top_share));
            }

            let gaussian_cdf = has(ExperimentKind::GaussianCdf).then(|| {
                let samples: Vec<f64> = rows.iter().map(|v| v.pointwise_abs_log).collect();
                PointwiseCdf {
                    theta: config.tails.theta,
                    samples: samples.len(),
                    ks_statistic: ks_statistic(&samples, gaussian_abs_log_cdf),
                    ks_limit: ks_critical_value(samples.len()),
                }
            });
            if let Some(g) = &gaussian_cdf {
                checks.push(Check::at_most(format!("ks_statistic[r={r}]"), g.ks_statistic, g.ks_limit));
            }

            let moment_growth = has(ExperimentKind::MomentGrowth).then(|| moment_growth(config, &rows, seed));
            if let Some(m) = &moment_growth {
                let finite = m.moments.iter().all(|e| e.mean.is_finite() && e.interval.upper.is_finite());
                checks.push(Check::holds(format!("moments_finite[r={r}]"), finite));
                checks.push(Check::holds(format!("normalized_moments_nondecreasing[r={r}]"), m.normalized_nondecreasing));
            }

            TailRadius {
                r,
                log_sigma_f,
                samples: rows.len(),
                mean_x_r: (!xs.is_empty()).then(|| mean(&xs)),
                tail_estimates,
                condition_y,
                gaussian_cdf,
                moment_growth,
            }
        })
        .collect();

    let pass = all_pass(&checks);
    TailsReport { model: config.model.name().to_string(), experiments: kinds, per_radius, failures, checks, pass }
}
