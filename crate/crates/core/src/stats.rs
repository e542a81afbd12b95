//! Small sample statistics used by the experiment folds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::random::{mix_seed, TrialStream};
use crate::series::compensated_sum;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    compensated_sum(&mut v) / values.len() as f64
}

/// Linear-interpolation quantile (type 7) of unsorted data; NaN for empty input.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_quantile(&v, q)
}

pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if sorted[hi] == sorted[lo] {
        // also keeps infinite entries from turning into NaN
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// `sqrt(p(1-p)/n)`.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Two-sample-free Kolmogorov–Smirnov distance `sup |F_n − F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value `1.63/√n` at level 0.01.
pub fn ks_critical_value(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Interval {
    let n = values.len();
    if n == 0 || resamples == 0 {
        return Interval { lower: f64::NAN, upper: f64::NAN };
    }
    let mut stream = TrialStream::new(mix_seed(seed, 0xB007), 0);
    let mut means = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for _ in 0..resamples {
        for slot in buf.iter_mut() {
            *slot = values[stream.rng().random_range(0..n)];
        }
        means.push(compensated_sum(&mut buf) / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Interval { lower: sorted_quantile(&means, alpha), upper: sorted_quantile(&means, 1.0 - alpha) }
}

/// Share of `Σ values` carried by the largest `fraction` of the values (at least one).
pub fn top_share(values: &[f64], fraction: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let k = ((values.len() as f64 * fraction).ceil() as usize).clamp(1, values.len());
    let total = compensated_sum(&mut v.clone());
    compensated_sum(&mut v[..k].to_vec()) / total
}

/// Whether `p_k` is nonincreasing up to `z` binomial standard errors of each step.
pub fn nonincreasing_within(fractions: &[f64], n: usize, z: f64) -> bool {
    fractions.windows(2).all(|w| {
        let se = (binomial_se(w[0], n).powi(2) + binomial_se(w[1], n).powi(2)).sqrt();
        w[1] <= w[0] + z * se.max(1.0 / n as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!(median(&[]).is_nan());
        assert_eq!(median(&[f64::INFINITY; 3]), f64::INFINITY);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let n = 1000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&v, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert!((ks_critical_value(10_000) - 0.0163).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_brackets_mean() {
        let v: Vec<f64> = (0..500).map(|i| (i % 7) as f64).collect();
        let ci = bootstrap_mean_ci(&v, 400, 0.95, 1);
        let m = mean(&v);
        assert!(ci.lower < m && m < ci.upper);
        assert_eq!(ci, bootstrap_mean_ci(&v, 400, 0.95, 1));
    }

    #[test]
    fn top_share_cases() {
        assert_eq!(top_share(&[1.0; 100], 0.01), 0.01);
        let mut v = vec![1.0; 99];
        v.push(99.0);
        assert_eq!(top_share(&v, 0.01), 0.5);
    }

    #[test]
    fn monotone_tolerance() {
        assert!(nonincreasing_within(&[0.3, 0.2, 0.1], 200, 3.0));
        assert!(nonincreasing_within(&[0.10, 0.12], 200, 3.0));
        assert!(!nonincreasing_within(&[0.05, 0.4], 200, 3.0));
    }
}
