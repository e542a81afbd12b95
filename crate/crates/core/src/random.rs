//! Coefficient laws and reproducible per-trial sampling of `f_ω`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::series::CoefficientSequence;

/// Law of the i.i.d. multipliers `χ_j`. All three have `E χ = 0`, `E|χ|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomModel {
    /// Standard complex Gaussian, density `e^{-|z|²}/π`.
    Gaussian,
    /// `±1` with probability 1/2 each.
    Rademacher,
    /// `e^{2πiθ}`, `θ` uniform on `[0, 1)`.
    Steinhaus,
}

impl RandomModel {
    pub const ALL: [RandomModel; 3] = [RandomModel::Gaussian, RandomModel::Rademacher, RandomModel::Steinhaus];

    pub fn name(self) -> &'static str {
        match self {
            RandomModel::Gaussian => "gaussian",
            RandomModel::Rademacher => "rademacher",
            RandomModel::Steinhaus => "steinhaus",
        }
    }
}

impl std::str::FromStr for RandomModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(RandomModel::Gaussian),
            "rademacher" => Ok(RandomModel::Rademacher),
            "steinhaus" => Ok(RandomModel::Steinhaus),
            other => Err(format!("unknown model '{other}' (expected gaussian, rademacher or steinhaus)")),
        }
    }
}

/// SplitMix64 finalizer; separates auxiliary streams from the trial streams.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based random stream for one trial: ChaCha8 keyed by the run seed,
/// with the trial index as the stream id.
#[derive(Debug, Clone)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial_index);
        TrialStream { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Draw one multiplier `χ`.
pub fn sample_chi(model: RandomModel, stream: &mut TrialStream) -> Complex64 {
    let rng = stream.rng();
    match model {
        RandomModel::Gaussian => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        }
        RandomModel::Rademacher => {
            if rng.random::<bool>() {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        }
        RandomModel::Steinhaus => {
            let theta: f64 = rng.random();
            Complex64::from_polar(1.0, TAU * theta)
        }
    }
}

/// One realization of `f_ω` truncated to degree `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSample {
    pub coefficients: Vec<Complex64>,
    pub degree: usize,
    /// `None` for the unperturbed base function.
    pub model: Option<RandomModel>,
    pub seed: u64,
    pub trial_index: u64,
    pub base_id: String,
}

impl TruncatedSample {
    /// The unperturbed base truncated to `degree` (all `χ_j = 1`).
    pub fn deterministic(seq: &CoefficientSequence, degree: usize) -> Self {
        TruncatedSample {
            coefficients: seq.truncate(degree),
            degree,
            model: None,
            seed: 0,
            trial_index: 0,
            base_id: seq.id(),
        }
    }

    /// A bare polynomial, mostly for tests and one-off evaluation.
    pub fn from_coefficients<I, T>(coefficients: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Complex64>,
    {
        let coefficients: Vec<Complex64> = coefficients.into_iter().map(Into::into).collect();
        assert!(!coefficients.is_empty(), "a sample needs at least one coefficient");
        TruncatedSample {
            degree: coefficients.len() - 1,
            coefficients,
            model: None,
            seed: 0,
            trial_index: 0,
            base_id: "polynomial".to_string(),
        }
    }

    /// Same sample with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coefficients {
            *c *= factor;
        }
        out
    }
}

/// Coefficients `χ_j a_j`, `j = 0..=N`, with `χ_j` drawn in order from the
/// stream of `(seed, trial_index)`. Extending `N` extends the vector without
/// changing its prefix.
pub fn sample_function(
    seq: &CoefficientSequence,
    model: RandomModel,
    degree: usize,
    seed: u64,
    trial_index: u64,
) -> TruncatedSample {
    let mut stream = TrialStream::new(seed, trial_index);
    let coefficients = (0..=degree)
        .map(|j| sample_chi(model, &mut stream) * seq.coefficient(j))
        .collect();
    TruncatedSample {
        coefficients,
        degree,
        model: Some(model),
        seed,
        trial_index,
        base_id: seq.id(),
    }
}

/// Sample mean of `χ` and of `|χ|²` over `n` draws.
pub fn empirical_moments(model: RandomModel, n: usize, seed: u64) -> Result<(Complex64, f64)> {
    if n == 0 {
        return invalid("empirical_moments needs n >= 1");
    }
    let mut stream = TrialStream::new(seed, u64::MAX);
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    let mut sq = Vec::with_capacity(n);
    for _ in 0..n {
        let chi = sample_chi(model, &mut stream);
        re.push(chi.re);
        im.push(chi.im);
        sq.push(chi.norm_sqr());
    }
    let nf = n as f64;
    let mean = Complex64::new(
        crate::series::compensated_sum(&mut re) / nf,
        crate::series::compensated_sum(&mut im) / nf,
    );
    Ok((mean, crate::series::compensated_sum(&mut sq) / nf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steinhaus_has_unit_modulus() {
        let mut s = TrialStream::new(7, 0);
        for _ in 0..10_000 {
            let chi = sample_chi(RandomModel::Steinhaus, &mut s);
            assert!((chi.norm() - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
    }

    #[test]
    fn rademacher_is_plus_minus_one() {
        let mut s = TrialStream::new(7, 1);
        let mut seen = [false; 2];
        for _ in 0..1000 {
            let chi = sample_chi(RandomModel::Rademacher, &mut s);
            assert_eq!(chi.im, 0.0);
            assert!(chi.re == 1.0 || chi.re == -1.0);
            seen[(chi.re > 0.0) as usize] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn gaussian_second_moment_at_fixed_seed() {
        let (mean, m2) = empirical_moments(RandomModel::Gaussian, 100_000, 2024).unwrap();
        assert!((m2 - 1.0).abs() < 0.02, "m2 = {m2}");
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn gaussian_moments_million_draws() {
        let (mean, m2) = empirical_moments(RandomModel::Gaussian, 1_000_000, 99).unwrap();
        assert!(mean.re.abs() < 0.005 && mean.im.abs() < 0.005, "mean = {mean}");
        assert!((m2 - 1.0).abs() < 0.005, "m2 = {m2}");
    }

    #[test]
    fn unit_modulus_models_have_unit_second_moment() {
        let (_, m2) = empirical_moments(RandomModel::Rademacher, 999, 5).unwrap();
        assert_eq!(m2, 1.0);
        let (_, m2) = empirical_moments(RandomModel::Steinhaus, 999, 5).unwrap();
        assert!((m2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empirical_moments_rejects_zero() {
        assert!(empirical_moments(RandomModel::Gaussian, 0, 1).is_err());
    }

    #[test]
    fn degree_zero_rademacher() {
        let seq = CoefficientSequence::exponential();
        let s = sample_function(&seq, RandomModel::Rademacher, 0, 3, 4);
        assert_eq!(s.coefficients.len(), 1);
        assert_eq!(s.coefficients[0].norm(), 1.0);
    }

    #[test]
    fn steinhaus_preserves_magnitudes() {
        let seq = CoefficientSequence::explicit([1.0, 1.0]);
        let s = sample_function(&seq, RandomModel::Steinhaus, 1, 11, 0);
        for c in &s.coefficients {
            assert!((c.norm() - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let seq = CoefficientSequence::exponential();
        for model in RandomModel::ALL {
            let a = sample_function(&seq, model, 30, 42, 9);
            let b = sample_function(&seq, model, 30, 42, 9);
            assert_eq!(a, b);
            let longer = sample_function(&seq, model, 50, 42, 9);
            assert_eq!(&longer.coefficients[..31], &a.coefficients[..]);
            let other = sample_function(&seq, model, 30, 42, 10);
            assert_ne!(other.coefficients, a.coefficients);
        }
    }

    #[test]
    fn model_parses_case_insensitively() {
        assert_eq!("Gaussian".parse::<RandomModel>().unwrap(), RandomModel::Gaussian);
        assert!("cauchy".parse::<RandomModel>().is_err());
    }
}
