//! Per-trial evaluation: one sample `f_ω`, every configured radius.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::config::{Constants, ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::functionals::{
    abs_log_moment, characteristic_t, log_rounding_floor, counting_n, find_zeros, log_abs_at, log_leading_coefficient, log_sigma_omega,
    with_radius_jitter, x_r_functional_log, ZeroSet, JITTER_ATTEMPTS, JITTER_STEP,
};
use crate::quadrature::QuadratureSpec;
use crate::random::{sample_function, TruncatedSample};
use crate::series::{
    log_max_modulus, log_sigma, log_sigma_derivative, pointwise_truncation_degree, star_transform, truncation_degree, CoefficientSequence,
    TruncationPolicy,
};

use super::records::{TailRecord, TailValues, TargetValues, TrialRecord, TrialValues};

/// Largest radius any evaluation may reach once jitter is applied.
fn jitter_cap(r_max: f64) -> f64 {
    r_max * (1.0 + JITTER_STEP * JITTER_ATTEMPTS as f64)
}

/// Quantities of the unperturbed base at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseAtRadius {
    pub r: f64,
    pub log_sigma_f: f64,
    pub log_m_f: f64,
    /// `None` beyond [`T_RESOLUTION`].
    pub t_f: Option<f64>,
    pub s_r: f64,
}

/// Largest rounding floor of the base at which `T(r, f)` is still reported.
pub const T_RESOLUTION: f64 = 1e-3;

impl BaseAtRadius {
    pub fn compute(seq: &CoefficientSequence, base: &TruncatedSample, r: f64, truncation: &TruncationPolicy, quadrature: &QuadratureSpec) -> Result<Self> {
        let t_f = if log_rounding_floor(base, r)? <= T_RESOLUTION.ln() {
            Some(with_radius_jitter(r, |rr| characteristic_t(base, rr, quadrature))?.0)
        } else {
            None
        };
        Ok(BaseAtRadius {
            r,
            log_sigma_f: log_sigma(seq, r, truncation)?,
            log_m_f: log_max_modulus(&base.coefficients, r)?,
            t_f,
            s_r: log_sigma_derivative(seq, r, truncation)?,
        })
    }
}

/// `log log σ` when defined, else `None`.
fn log_log(x: f64) -> Option<f64> {
    (x > 0.0).then(|| x.ln())
}

/// Everything shared by the trials of a `verify` run.
#[derive(Debug, Clone)]
pub struct VerifyContext {
    pub config: ExperimentConfig,
    /// Degree of the random samples.
    pub degree: usize,
    pub cap: f64,
    pub targets: Vec<Complex64>,
    /// The base, truncated for pointwise accuracy.
    pub base: TruncatedSample,
    pub radii: Vec<BaseAtRadius>,
}

impl VerifyContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let seq = &config.base;
        if seq.nonzero_count(config.truncation.max_degree) < 2 {
            return Err(Error::InvalidInput("base must have at least two nonzero coefficients for log log sigma to grow".into()));
        }
        let cap = jitter_cap(config.max_radius());
        let degree = truncation_degree(seq, cap, &config.truncation)?;
        let base = TruncatedSample::deterministic(seq, pointwise_truncation_degree(seq, cap, &config.truncation)?);
        let radii = config
            .radii
            .iter()
            .map(|&r| BaseAtRadius::compute(seq, &base, r, &config.truncation, &config.quadrature))
            .collect::<Result<Vec<_>>>()?;

        let first = &radii[0];
        let wants = |k: ExperimentKind| config.experiments.contains(&k);
        if !(first.log_sigma_f > 1.0) {
            return Err(Error::InvalidInput(format!(
                "log log sigma(r, f) must be positive at the smallest radius; log sigma = {} at r = {}",
                first.log_sigma_f, first.r
            )));
        }
        if wants(ExperimentKind::Bounds) && !(first.log_sigma_f > std::f64::consts::E) {
            return Err(Error::InvalidInput(format!("bounds need log sigma(r, f) > e at every radius; got {} at r = {}", first.log_sigma_f, first.r)));
        }
        if wants(ExperimentKind::ValueA) {
            if config.target_values.is_empty() {
                return Err(Error::InvalidInput("value_a needs at least one target value".into()));
            }
            truncation_degree(&star_transform(seq), cap, &config.truncation)?;
        }
        if wants(ExperimentKind::Nns) {
            if config.model != crate::random::RandomModel::Rademacher {
                return Err(Error::InvalidInput("nns requires the rademacher model".into()));
            }
            if radii.windows(2).all(|w| (w[1].s_r - w[0].s_r).abs() <= 1e-12 * w[0].s_r.max(1.0)) {
                return Err(Error::InvalidInput("nns needs a base whose r d/dr log sigma varies with r".into()));
            }
        }
        if let Some(k) = config.experiments.iter().find(|k| k.is_tail_family()) {
            return Err(Error::InvalidInput(format!("experiment {} belongs to the tails command", k.name())));
        }
        Ok(VerifyContext { config: config.clone(), degree, cap, targets: config.targets(), base, radii })
    }

    pub fn sample(&self, trial: u64) -> TruncatedSample {
        sample_function(&self.config.base, self.config.model, self.degree, self.config.seed, trial)
    }

    fn base_at(&self, k: usize, r_eval: f64) -> Result<BaseAtRadius> {
        if r_eval == self.radii[k].r {
            Ok(self.radii[k].clone())
        } else {
            BaseAtRadius::compute(&self.config.base, &self.base, r_eval, &self.config.truncation, &self.config.quadrature)
        }
    }

    /// Rows of one trial, one per grid radius, in grid order.
    pub fn run_trial(&self, trial: u64) -> Vec<TrialRecord> {
        let failed_all = |e: Error| {
            self.radii
                .iter()
                .map(|b| TrialRecord { trial_index: trial, r: b.r, failure: Some(failure_text(&e)), values: None })
                .collect()
        };
        let sample = self.sample(trial);
        let zeros = match find_zeros(&sample, Complex64::new(0.0, 0.0), self.cap) {
            Ok(z) => z,
            Err(e) => return failed_all(e),
        };
        let target_zeros = match self.targets.iter().map(|&a| find_zeros(&sample, a, self.cap)).collect::<Result<Vec<_>>>() {
            Ok(z) => z,
            Err(e) => return failed_all(e),
        };
        let log_c0 = match log_leading_coefficient(&sample) {
            Ok(v) => v,
            Err(e) => return failed_all(e),
        };

        let mut rows: Vec<TrialRecord> = (0..self.radii.len())
            .map(|k| {
                let r = self.radii[k].r;
                match self.row_values(&sample, k, &zeros, &target_zeros, log_c0) {
                    Ok(v) => TrialRecord { trial_index: trial, r, failure: None, values: Some(v) },
                    Err(e) => TrialRecord { trial_index: trial, r, failure: Some(failure_text(&e)), values: None },
                }
            })
            .collect();
        fill_thresholds(&mut rows);
        rows
    }

    fn row_values(&self, sample: &TruncatedSample, k: usize, zeros: &ZeroSet, target_zeros: &[ZeroSet], log_c0: f64) -> Result<TrialValues> {
        let ((t_omega, x_r, base), r_eval) = with_radius_jitter(self.radii[k].r, |r| {
            let base = self.base_at(k, r)?;
            let t = characteristic_t(sample, r, &self.config.quadrature)?;
            let x = x_r_functional_log(sample, base.log_sigma_f, r, &self.config.quadrature)?;
            Ok((t, x, base))
        })?;
        let constants = &self.config.constants;
        let log_sigma_omega = log_sigma_omega(sample, r_eval)?;
        let counting_n_zero = counting_n(zeros, r_eval)?;
        let ll_sigma = log_log(base.log_sigma_f).unwrap_or(f64::NAN);
        let band = constants.band(ll_sigma);
        let band_a = band + (1.0 + constants.delta) * ll_sigma;
        let deviation = (base.log_sigma_f - counting_n_zero).abs();

        let targets = target_zeros
            .iter()
            .map(|z| {
                let n_a = counting_n(z, r_eval)?;
                let deviation_a = (base.log_sigma_f - n_a).abs();
                Ok(TargetValues {
                    a_re: z.target.re,
                    a_im: z.target.im,
                    n_a: z.count_within(r_eval) as u64,
                    counting_n_a: n_a,
                    deviation_a,
                    violated_a: deviation_a > band_a,
                    threshold_radius_a: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(TrialValues {
            r_eval,
            n_zero: zeros.count_within(r_eval) as u64,
            counting_n_zero,
            log_c0,
            log_sigma_f: base.log_sigma_f,
            log_sigma_omega,
            log_m_f: base.log_m_f,
            t_f: base.t_f,
            t_omega,
            x_r,
            s_r: base.s_r,
            deviation,
            jensen_deviation: (base.log_sigma_f - counting_n_zero - log_c0).abs(),
            band,
            band_a,
            violated: deviation > band,
            threshold_radius_estimate: None,
            lem3_f_slack: base.t_f.filter(|_| base.log_sigma_f >= 0.0).map(|t| base.log_sigma_f + 0.5 * LN_2 - t),
            lem3_omega_slack: (log_sigma_omega >= 0.0).then_some(log_sigma_omega + 0.5 * LN_2 - t_omega),
            sigma_le_m_slack: base.log_m_f - base.log_sigma_f,
            maxlem_slack: log_log(base.log_sigma_f).map(|ll| base.log_m_f - base.log_sigma_f - ll),
            lem6_slack: log_log(base.log_sigma_f).map(|ll| base.log_sigma_f + ll + 2.0 - log_sigma_omega),
            cor1_f_slack: base.t_f.and_then(|t| log_log(t).map(|lt| counting_n_zero + constants.band(lt) - t)),
            cor1_omega_slack: log_log(t_omega).map(|lt| counting_n_zero + constants.band(lt) - t_omega),
            newcor3_slack: log_log(base.log_m_f).map(|ll| constants.band(ll) + ll - (base.log_m_f - counting_n_zero).abs()),
            targets,
        })
    }
}

fn failure_text(e: &Error) -> String {
    format!("{}: {e}", e.kind())
}

/// Smallest grid radius beyond which the trial shows no violation: the last
/// violating radius, or the first radius when nothing is violated. `None` when
/// the largest radius itself is violated or a row failed.
fn threshold_radius(rows: &[(f64, Option<bool>)]) -> Option<f64> {
    if rows.iter().any(|(_, v)| v.is_none()) {
        return None;
    }
    let last_violation = rows.iter().rposition(|(_, v)| *v == Some(true));
    match last_violation {
        None => rows.first().map(|(r, _)| *r),
        Some(i) if i + 1 == rows.len() => None,
        Some(i) => Some(rows[i].0),
    }
}

fn fill_thresholds(rows: &mut [TrialRecord]) {
    let flags: Vec<(f64, Option<bool>)> = rows.iter().map(|r| (r.r, r.values.as_ref().map(|v| v.violated))).collect();
    let t0 = threshold_radius(&flags);
    let n_targets = rows.iter().find_map(|r| r.values.as_ref().map(|v| v.targets.len())).unwrap_or(0);
    let per_target: Vec<Option<f64>> = (0..n_targets)
        .map(|k| {
            let flags: Vec<(f64, Option<bool>)> = rows.iter().map(|r| (r.r, r.values.as_ref().map(|v| v.targets[k].violated_a))).collect();
            threshold_radius(&flags)
        })
        .collect();
    for row in rows.iter_mut() {
        if let Some(v) = row.values.as_mut() {
            v.threshold_radius_estimate = t0;
            for (t, th) in v.targets.iter_mut().zip(&per_target) {
                t.threshold_radius_a = *th;
            }
        }
    }
}

/// Model-specific tail law `P(X_r ≥ (C/A · log x)^{1/B}) ≤ C₁/x^C`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TailLaw {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl TailLaw {
    pub fn for_model(model: crate::random::RandomModel, k: &Constants) -> Self {
        use crate::random::RandomModel::*;
        match model {
            Gaussian => TailLaw { a: 2.0 / (1.0 + k.tau), b: 1.0, c: (1.0 + 2.0 * k.tau) / (1.0 + k.tau) },
            Rademacher => TailLaw { a: k.epsilon, b: 1.0 / 6.0, c: 1.0 + k.tau },
            Steinhaus => TailLaw { a: 1.0 / (1.0 + k.tau), b: 1.0, c: 1.0 + k.tau },
        }
    }

    /// `ψ(x) = (C/A · log x)^{1/B}`.
    pub fn threshold(&self, x: f64) -> f64 {
        (self.c / self.a * x.ln()).powf(1.0 / self.b)
    }
}

/// Experiments a `tails` run performs; `tail_estimates` when none are listed.
pub fn tail_kinds(config: &ExperimentConfig) -> Vec<ExperimentKind> {
    if config.experiments.is_empty() {
        vec![ExperimentKind::TailEstimates]
    } else {
        config.experiments.clone()
    }
}

/// Everything shared by the trials of a `tails` run.
#[derive(Debug, Clone)]
pub struct TailContext {
    pub config: ExperimentConfig,
    pub degree: usize,
    pub log_sigma_f: Vec<f64>,
    pub need_x_r: bool,
    pub need_moments: bool,
}

impl TailContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let kinds = tail_kinds(config);
        if let Some(k) = kinds.iter().find(|k| !k.is_tail_family()) {
            return Err(Error::InvalidInput(format!("experiment {} belongs to the verify command", k.name())));
        }
        if config.trials < crate::config::TAIL_TRIALS_FLOOR {
            return Err(Error::StatisticalFloor { what: "tail estimates".into(), required: crate::config::TAIL_TRIALS_FLOOR, got: config.trials });
        }
        if kinds.contains(&ExperimentKind::GaussianCdf) && config.model != crate::random::RandomModel::Gaussian {
            return Err(Error::InvalidInput("gaussian_cdf requires the gaussian model".into()));
        }
        if kinds.contains(&ExperimentKind::MomentGrowth) && config.model != crate::random::RandomModel::Rademacher {
            return Err(Error::InvalidInput("moment_growth requires the rademacher model".into()));
        }
        let degree = truncation_degree(&config.base, config.max_radius(), &config.truncation)?;
        let log_sigma_f = config.radii.iter().map(|&r| log_sigma(&config.base, r, &config.truncation)).collect::<Result<Vec<_>>>()?;
        Ok(TailContext {
            config: config.clone(),
            degree,
            log_sigma_f,
            need_x_r: kinds.iter().any(|k| matches!(k, ExperimentKind::TailEstimates | ExperimentKind::ConditionY | ExperimentKind::MomentGrowth)),
            need_moments: kinds.contains(&ExperimentKind::MomentGrowth),
        })
    }

    pub fn run_trial(&self, trial: u64) -> Vec<TailRecord> {
        let cfg = &self.config;
        let sample = sample_function(&cfg.base, cfg.model, self.degree, cfg.seed, trial);
        cfg.radii
            .iter()
            .zip(&self.log_sigma_f)
            .map(|(&r, &ls)| match self.values(&sample, r, ls) {
                Ok(v) => TailRecord { trial_index: trial, r, failure: None, values: Some(v) },
                Err(e) => TailRecord { trial_index: trial, r, failure: Some(failure_text(&e)), values: None },
            })
            .collect()
    }

    fn values(&self, sample: &TruncatedSample, r: f64, log_sigma_f: f64) -> Result<TailValues> {
        let q = &self.config.quadrature;
        let pointwise_abs_log = (log_abs_at(sample, r, self.config.tails.theta)? - log_sigma_f).abs();
        let x_r = if self.need_x_r { Some(x_r_functional_log(sample, log_sigma_f, r, q)?) } else { None };
        let moments = if self.need_moments {
            self.config
                .tails
                .p_grid
                .iter()
                .map(|&p| match (p, x_r) {
                    (1.0, Some(x)) => Ok(x),
                    _ => abs_log_moment(sample, log_sigma_f, r, p, q),
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(TailValues { log_sigma_f, pointwise_abs_log, x_r, moments })
    }
}
