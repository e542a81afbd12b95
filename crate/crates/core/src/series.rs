//! Deterministic base functions `f(z) = Σ a_j z^j` and their radial functionals.
//!
//! Sums of `|a_j|² r^{2j}` are carried in log space: at large radii the
//! individual terms overflow `f64` long before `log σ(r, f)` becomes large.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::poly::CirclePoly;

/// Taylor coefficients of a base entire function.
///
/// Generator kinds describe transcendental entire functions; `ExplicitList`
/// is a polynomial. `Star` is the coefficient sequence of `z f'(z)` for a
/// generator kind (explicit lists are transformed eagerly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientSequence {
    /// `a_j = 1/j!`
    Exponential,
    /// `a_j = c^j / (j!)^s`
    GeometricFactorial { c: f64, s: f64 },
    /// `a_j = 1/Γ(1 + j/ρ)`
    MittagLeffler { rho: f64 },
    ExplicitList { coefficients: Vec<Complex64> },
    Star { of: Box<CoefficientSequence> },
}

/// How far a series is summed before its tail is considered negligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationPolicy {
    pub tail_tolerance: f64,
    pub max_degree: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { tail_tolerance: 1e-12, max_degree: 4096 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return invalid(format!(
                "tail_tolerance must lie in (0, 1), got {}",
                self.tail_tolerance
            ));
        }
        if self.max_degree < 1 {
            return invalid("max_degree must be at least 1");
        }
        Ok(())
    }
}

/// Largest ratio between consecutive squared terms beyond the cut that still
/// certifies the geometric tail bound.
const MAX_TAIL_RATIO: f64 = 0.5;

fn exact_inverse_factorial(j: u64) -> f64 {
    if j > 170 {
        return (-ln_gamma(j as f64 + 1.0)).exp();
    }
    let mut fact = 1.0f64;
    for k in 2..=j {
        fact *= k as f64;
    }
    1.0 / fact
}

impl CoefficientSequence {
    pub fn exponential() -> Self {
        CoefficientSequence::Exponential
    }

    pub fn explicit<I, T>(coefficients: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Complex64>,
    {
        CoefficientSequence::ExplicitList {
            coefficients: coefficients.into_iter().map(Into::into).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientSequence::Exponential => Ok(()),
            CoefficientSequence::GeometricFactorial { c, s } => {
                if !(c.is_finite() && *c > 0.0 && s.is_finite() && *s > 0.0) {
                    return invalid(format!(
                        "geometric-factorial requires c > 0 and s > 0, got c = {c}, s = {s}"
                    ));
                }
                Ok(())
            }
            CoefficientSequence::MittagLeffler { rho } => {
                if !(rho.is_finite() && *rho > 0.0) {
                    return invalid(format!("mittag-leffler requires rho > 0, got {rho}"));
                }
                Ok(())
            }
            CoefficientSequence::ExplicitList { coefficients } => {
                if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                    return invalid("explicit-list coefficients must be finite");
                }
                if coefficients.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
                    return invalid("explicit-list needs at least one nonzero coefficient");
                }
                Ok(())
            }
            CoefficientSequence::Star { of } => {
                if of.finite_degree().is_some() {
                    return invalid("star of an explicit list must be materialized as a list");
                }
                of.validate()
            }
        }
    }

    /// Stable identifier used in sample provenance and reports.
    pub fn id(&self) -> String {
        match self {
            CoefficientSequence::Exponential => "exponential".to_string(),
            CoefficientSequence::GeometricFactorial { c, s } => {
                format!("geometric-factorial(c={c},s={s})")
            }
            CoefficientSequence::MittagLeffler { rho } => format!("mittag-leffler(rho={rho})"),
            CoefficientSequence::ExplicitList { coefficients } => {
                let parts: Vec<String> = coefficients
                    .iter()
                    .map(|c| if c.im == 0.0 { format!("{}", c.re) } else { format!("{}{:+}i", c.re, c.im) })
                    .collect();
                format!("explicit-list[{}]", parts.join(","))
            }
            CoefficientSequence::Star { of } => format!("star({})", of.id()),
        }
    }

    /// Degree of a polynomial base (index of the last nonzero coefficient).
    pub fn finite_degree(&self) -> Option<usize> {
        match self {
            CoefficientSequence::ExplicitList { coefficients } => {
                coefficients.iter().rposition(|c| *c != Complex64::new(0.0, 0.0))
            }
            _ => None,
        }
    }

    /// Number of coefficients that are not identically zero, capped at `limit`.
    pub fn nonzero_count(&self, limit: usize) -> usize {
        match self {
            CoefficientSequence::ExplicitList { coefficients } => coefficients
                .iter()
                .filter(|c| **c != Complex64::new(0.0, 0.0))
                .count()
                .min(limit),
            _ => limit,
        }
    }

    /// The coefficient `a_j`.
    pub fn coefficient(&self, j: usize) -> Complex64 {
        match self {
            CoefficientSequence::Exponential => Complex64::new(exact_inverse_factorial(j as u64), 0.0),
            CoefficientSequence::GeometricFactorial { .. } | CoefficientSequence::MittagLeffler { .. } => {
                Complex64::new(self.ln_abs_coefficient(j).exp(), 0.0)
            }
            CoefficientSequence::ExplicitList { coefficients } => {
                coefficients.get(j).copied().unwrap_or_default()
            }
            CoefficientSequence::Star { of } => of.coefficient(j) * j as f64,
        }
    }

    /// `ln |a_j|`, finite even where `a_j` itself underflows; `-inf` for zeros.
    pub fn ln_abs_coefficient(&self, j: usize) -> f64 {
        let jf = j as f64;
        match self {
            CoefficientSequence::Exponential => {
                if j <= 170 {
                    exact_inverse_factorial(j as u64).ln()
                } else {
                    -ln_gamma(jf + 1.0)
                }
            }
            CoefficientSequence::GeometricFactorial { c, s } => jf * c.ln() - s * ln_gamma(jf + 1.0),
            CoefficientSequence::MittagLeffler { rho } => -ln_gamma(1.0 + jf / rho),
            CoefficientSequence::ExplicitList { coefficients } => {
                coefficients.get(j).map_or(f64::NEG_INFINITY, |c| c.norm().ln())
            }
            CoefficientSequence::Star { of } => {
                if j == 0 {
                    f64::NEG_INFINITY
                } else {
                    jf.ln() + of.ln_abs_coefficient(j)
                }
            }
        }
    }

    /// Coefficients `a_0 ..= a_degree`.
    pub fn truncate(&self, degree: usize) -> Vec<Complex64> {
        (0..=degree).map(|j| self.coefficient(j)).collect()
    }

    fn ln_term(&self, j: usize, ln_r: f64) -> f64 {
        let la = self.ln_abs_coefficient(j);
        if la == f64::NEG_INFINITY {
            la
        } else {
            2.0 * (la + j as f64 * ln_r)
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return invalid(format!("radius must be positive and finite, got {r}"));
    }
    Ok(())
}

/// Running `ln Σ e^{l_i}` used only for stopping decisions.
#[derive(Default)]
struct RunningLogSum {
    max: f64,
    scaled: f64,
}

impl RunningLogSum {
    fn new() -> Self {
        RunningLogSum { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    fn push(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if l > self.max {
            self.scaled = self.scaled * (self.max - l).exp() + 1.0;
            self.max = l;
        } else {
            self.scaled += (l - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Neumaier-compensated sum, terms added smallest first.
pub(crate) fn compensated_sum(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values.iter() {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln Σ_i w_i e^{l_i}` for nonnegative weights, in compensated order.
pub(crate) fn weighted_log_sum(ln_terms: &[f64], weights: impl Fn(usize) -> f64) -> f64 {
    let max = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut scaled: Vec<f64> = ln_terms
        .iter()
        .enumerate()
        .map(|(j, &l)| if l == f64::NEG_INFINITY { 0.0 } else { weights(j) * (l - max).exp() })
        .collect();
    max + compensated_sum(&mut scaled).ln()
}

/// Minimal degree `N` whose certified tail `Σ_{j>N} |a_j|² r^{2j}` is at most
/// `ε_tail² · Σ_{j≤N} |a_j|² r^{2j}`.
///
/// For the generator families the ratio of consecutive squared terms is
/// nonincreasing in `j`, so once it drops to `1/2` at the first omitted
/// index the tail is dominated by a geometric series.
pub fn truncation_degree(seq: &CoefficientSequence, r: f64, policy: &TruncationPolicy) -> Result<usize> {
    certified_degree(seq, r, policy, false)
}

/// Like [`truncation_degree`], but the tail is also at most `ε_tail²` in
/// absolute terms, so the polynomial tracks `f` where `|f|` is of order one
/// (pointwise error below `4·ε_tail` on `|z| ≤ r`). Needed for `log⁺|f|` of
/// a base that is tiny on part of the circle, like `e^z` on the left half.
pub fn pointwise_truncation_degree(seq: &CoefficientSequence, r: f64, policy: &TruncationPolicy) -> Result<usize> {
    certified_degree(seq, r, policy, true)
}

fn certified_degree(seq: &CoefficientSequence, r: f64, policy: &TruncationPolicy, absolute: bool) -> Result<usize> {
    check_radius(r)?;
    policy.validate()?;
    seq.validate()?;
    if let Some(d) = seq.finite_degree() {
        return Ok(d);
    }
    let ln_r = r.ln();
    let ln_eps2 = 2.0 * policy.tail_tolerance.ln();
    let mut head = RunningLogSum::new();
    let mut next = seq.ln_term(0, ln_r);
    for n in 0..policy.max_degree {
        head.push(next);
        let first_omitted = seq.ln_term(n + 1, ln_r);
        let after = seq.ln_term(n + 2, ln_r);
        next = first_omitted;
        if first_omitted == f64::NEG_INFINITY {
            continue;
        }
        let ln_ratio = after - first_omitted;
        if ln_ratio > MAX_TAIL_RATIO.ln() {
            continue;
        }
        let ratio = ln_ratio.exp();
        let ln_tail_bound = first_omitted - (1.0 - ratio).ln();
        let reference = if absolute { head.value().min(0.0) } else { head.value() };
        if ln_tail_bound <= ln_eps2 + reference {
            return Ok(n);
        }
    }
    Err(Error::TruncationFailure { r, max_degree: policy.max_degree })
}

fn ln_terms_to(seq: &CoefficientSequence, r: f64, degree: usize) -> Vec<f64> {
    let ln_r = r.ln();
    (0..=degree).map(|j| seq.ln_term(j, ln_r)).collect()
}

/// `log σ(r, f)`, the primary form; `σ` itself overflows for large `r`.
pub fn log_sigma(seq: &CoefficientSequence, r: f64, policy: &TruncationPolicy) -> Result<f64> {
    let n = truncation_degree(seq, r, policy)?;
    Ok(0.5 * weighted_log_sum(&ln_terms_to(seq, r, n), |_| 1.0))
}

/// `σ(r, f) = (Σ |a_j|² r^{2j})^{1/2}`.
pub fn sigma(seq: &CoefficientSequence, r: f64, policy: &TruncationPolicy) -> Result<f64> {
    log_sigma(seq, r, policy).map(f64::exp)
}

/// `r d/dr log σ(r, f) = Σ j|a_j|² r^{2j} / Σ |a_j|² r^{2j}`.
///
/// Both sums run to the degree certified for `z f'(z)`, whose squared terms
/// dominate the `j`-weighted ones.
pub fn log_sigma_derivative(seq: &CoefficientSequence, r: f64, policy: &TruncationPolicy) -> Result<f64> {
    let n = truncation_degree(&star_transform(seq), r, policy)?;
    let terms = ln_terms_to(seq, r, n);
    let num = weighted_log_sum(&terms, |j| j as f64);
    let den = weighted_log_sum(&terms, |_| 1.0);
    if num == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((num - den).exp())
}

/// Coefficients of `f*(z) = z f'(z)`.
pub fn star_transform(seq: &CoefficientSequence) -> CoefficientSequence {
    match seq {
        CoefficientSequence::ExplicitList { coefficients } => CoefficientSequence::ExplicitList {
            coefficients: coefficients.iter().enumerate().map(|(j, c)| c * j as f64).collect(),
        },
        other => CoefficientSequence::Star { of: Box::new(other.clone()) },
    }
}

/// `M(r) = max_{|z|=r} |p(z)|` for a polynomial given by its coefficients.
pub fn max_modulus(coeffs: &[Complex64], r: f64) -> Result<f64> {
    log_max_modulus(coeffs, r).map(f64::exp)
}

/// `log M(r)`, evaluated on a normalized copy of `p` so large radii do not overflow.
///
/// Dense equispaced grid of at least `8·degree + 64` nodes, then
/// golden-section refinement around the best few grid maxima.
pub fn log_max_modulus(coeffs: &[Complex64], r: f64) -> Result<f64> {
    check_radius(r)?;
    if coeffs.iter().all(|c| c.norm() == 0.0) {
        return invalid("max_modulus needs at least one nonzero coefficient");
    }
    let (poly, shift) = CirclePoly::normalized(coeffs, r, Complex64::new(0.0, 0.0));
    let degree = coeffs.len().saturating_sub(1);
    let m = 8 * degree + 64;
    let values: Vec<f64> = poly.grid(m).iter().map(|v| v.norm()).collect();
    let h = std::f64::consts::TAU / m as f64;

    let mut peaks: Vec<usize> = (0..m)
        .filter(|&k| {
            let prev = values[(k + m - 1) % m];
            let next = values[(k + 1) % m];
            values[k] >= prev && values[k] >= next
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    peaks.truncate(4);

    let mut best = values.iter().copied().fold(0.0, f64::max);
    let magnitude = |theta: f64| poly.eval(theta).norm();
    for &k in &peaks {
        let centre = k as f64 * h;
        let (_, v) = golden_section_max(&magnitude, centre - h, centre + h);
        best = best.max(v);
    }
    Ok(best.ln() + shift)
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        let (fmax, fmin) = if f1 > f2 { (f1, f2) } else { (f2, f1) };
        if fmax > 0.0 && (fmax - fmin) <= 1e-12 * fmax && hi - lo < 1e-7 {
            break;
        }
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
