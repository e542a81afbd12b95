//! Circle integrals and zero counts of a truncated sample `p`.
//!
//! Every evaluation on `|z| = r` goes through [`CirclePoly::normalized`], so
//! samples whose values overflow `f64` on the circle are still handled; the
//! normalizing constant is added back in log space.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::CirclePoly;
use crate::quadrature::{circle_mean, Integrand, QuadratureSpec};
use crate::random::TruncatedSample;
use crate::roots::polynomial_roots;
use crate::series::{compensated_sum, weighted_log_sum};

/// A root closer than this (relative to `r`) to the circle makes the circle unusable.
pub const CIRCLE_PROXIMITY: f64 = 1e-8;
/// Relative radius step of the jitter protocol.
pub const JITTER_STEP: f64 = 1e-6;
/// Radii tried by the jitter protocol, the unjittered one included.
pub const JITTER_ATTEMPTS: usize = 8;
/// Required `|p(ρ) − a| / max_j |c_j||ρ|^j` for every computed root.
pub const ROOT_RESIDUAL_TARGET: f64 = 1e-10;
/// Roots closer than this relative distance count as one multiple root.
pub const CLUSTER_TOLERANCE: f64 = 1e-8;

const WINDING_MAX_DEPTH: usize = 40;
const POLISH_STEPS: usize = 8;

/// Roots of `p − a` in the closed disk of radius `radius_cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub target: Complex64,
    pub radius_cap: f64,
    /// `|ρ_k|` for roots with `0 < |ρ_k| ≤ radius_cap`, nondecreasing, repeated per multiplicity.
    pub moduli: Vec<f64>,
    /// Order of the root at `z = 0`.
    pub origin_multiplicity: usize,
    /// Largest relative residual `|p(ρ) − a| / max_j |c_j||ρ|^j` over reported roots.
    pub quality: f64,
}

impl ZeroSet {
    /// `n(r, a)`: roots in `|z| ≤ r`, with multiplicity.
    pub fn count_within(&self, r: f64) -> usize {
        self.origin_multiplicity + self.moduli.partition_point(|&m| m <= r)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return invalid(format!("radius must be positive and finite, got {r}"));
    }
    Ok(())
}

/// Coefficients of `p − a`.
fn shifted(sample: &TruncatedSample, a: Complex64) -> Vec<Complex64> {
    let mut d = sample.coefficients.clone();
    if d.is_empty() {
        d.push(Complex64::new(0.0, 0.0));
    }
    d[0] -= a;
    d
}

/// Index and value of the first nonzero Taylor coefficient of `p − a`.
pub fn leading_term(sample: &TruncatedSample, a: Complex64) -> Option<(usize, Complex64)> {
    shifted(sample, a).into_iter().enumerate().find(|(_, c)| c.norm() != 0.0)
}

/// `log|c(0)|`, with `c(0)` the first nonzero Taylor coefficient of `p`.
pub fn log_leading_coefficient(sample: &TruncatedSample) -> Result<f64> {
    match leading_term(sample, Complex64::new(0.0, 0.0)) {
        Some((_, c)) => Ok(c.norm().ln()),
        None => invalid("sample is identically zero"),
    }
}

/// `|d(ρ)| / max_j |d_j||ρ|^j` and the Newton correction `d(ρ)/d'(ρ)`.
fn relative_residual(d: &[Complex64], rho: Complex64) -> (f64, Complex64) {
    let (q, _) = CirclePoly::normalized(d, rho.norm(), Complex64::new(0.0, 0.0));
    let theta = rho.arg();
    let (v, dv) = q.eval_with_derivative(theta);
    // dq/dθ = i ρ d'(ρ) in normalized units
    let step = rho * Complex64::i() * v / dv;
    (v.norm(), step)
}

fn polish(d: &[Complex64], rho: Complex64) -> (Complex64, f64) {
    let (mut best_res, mut step) = relative_residual(d, rho);
    let mut best = rho;
    for _ in 0..POLISH_STEPS {
        if best_res <= ROOT_RESIDUAL_TARGET * 1e-2 || !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        let candidate = best - step;
        let (res, next) = relative_residual(d, candidate);
        if res < best_res {
            best = candidate;
            best_res = res;
            step = next;
        } else {
            break;
        }
    }
    (best, best_res)
}

/// Moduli with members of each cluster replaced by the cluster's mean modulus.
fn merge_clusters(mut roots: Vec<Complex64>) -> Vec<f64> {
    roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        let ri = roots[i].norm();
        for j in i + 1..n {
            let rj = roots[j].norm();
            if rj - ri > CLUSTER_TOLERANCE * rj {
                break;
            }
            if (roots[i] - roots[j]).norm() <= CLUSTER_TOLERANCE * rj {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (i, z) in roots.iter().enumerate() {
        let root = find(&mut parent, i);
        sum[root] += z.norm();
        count[root] += 1;
    }
    let mut moduli: Vec<f64> = (0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            sum[root] / count[root] as f64
        })
        .collect();
    moduli.sort_by(f64::total_cmp);
    moduli
}

/// All roots of `p − a` with `|ρ| ≤ radius_cap`, plus the exact order at the origin.
pub fn find_zeros(sample: &TruncatedSample, a: Complex64, radius_cap: f64) -> Result<ZeroSet> {
    check_radius(radius_cap)?;
    let mut d = shifted(sample, a);
    while d.len() > 1 && d.last().is_some_and(|c| c.norm() == 0.0) {
        d.pop();
    }
    let origin = match d.iter().position(|c| c.norm() != 0.0) {
        Some(k) => k,
        None => return invalid("p - a is identically zero"),
    };
    let d = &d[origin..];
    let mut zero_set = ZeroSet { target: a, radius_cap, moduli: Vec::new(), origin_multiplicity: origin, quality: 0.0 };
    if d.len() < 2 {
        return Ok(zero_set);
    }

    let mut roots = Vec::with_capacity(d.len() - 1);
    for rho in polynomial_roots(d) {
        let (rho, res) = polish(d, rho);
        if !(res <= ROOT_RESIDUAL_TARGET) {
            return Err(Error::RootFindingFailure { re: rho.re, im: rho.im, residual: res, target: ROOT_RESIDUAL_TARGET });
        }
        if rho.norm() <= radius_cap {
            zero_set.quality = zero_set.quality.max(res);
        }
        roots.push(rho);
    }
    zero_set.moduli = merge_clusters(roots).into_iter().filter(|&m| m <= radius_cap).collect();
    Ok(zero_set)
}

fn proximity_error(r: f64) -> Error {
    Error::CircleRootProximity { r, threshold: CIRCLE_PROXIMITY, attempts: 1 }
}

fn near_circle(q: Complex64, dq: Complex64) -> bool {
    // |q / (dq/dθ)| approximates the distance to the nearest root in units of r
    q.norm() <= CIRCLE_PROXIMITY * dq.norm() || q.norm() == 0.0
}

fn phase_increment(poly: &CirclePoly, r: f64, (ta, wa): (f64, Complex64), (tb, wb): (f64, Complex64), depth: usize) -> Result<f64> {
    if (wb - wa).norm() <= 0.5 * wa.norm().min(wb.norm()) {
        return Ok((wb / wa).arg());
    }
    if depth >= WINDING_MAX_DEPTH {
        return Err(proximity_error(r));
    }
    let tm = 0.5 * (ta + tb);
    let (wm, dm) = poly.eval_with_derivative(tm);
    if near_circle(wm, dm) {
        return Err(proximity_error(r));
    }
    Ok(phase_increment(poly, r, (ta, wa), (tm, wm), depth + 1)? + phase_increment(poly, r, (tm, wm), (tb, wb), depth + 1)?)
}

/// Winding number of `θ ↦ p(re^{iθ}) − a` about 0, i.e. `n(r, a)` by the argument principle.
pub fn count_zeros_argument(sample: &TruncatedSample, r: f64, a: Complex64, spec: &QuadratureSpec) -> Result<usize> {
    check_radius(r)?;
    spec.validate()?;
    let (poly, _) = CirclePoly::normalized(&shifted(sample, a), r, Complex64::new(0.0, 0.0));
    if poly.is_zero() {
        return invalid("p - a is identically zero");
    }
    let deg = poly.degree();
    let m = (4 * deg + 64).max(spec.nodes_for(deg));
    let values = poly.grid(m);
    let slopes = poly.derivative_grid(m);
    if values.iter().zip(&slopes).any(|(&q, &dq)| near_circle(q, dq)) {
        return Err(proximity_error(r));
    }
    let mut increments = Vec::with_capacity(m);
    for k in 0..m {
        let a = (CirclePoly::node(m, k), values[k]);
        let b = (CirclePoly::node(m, k + 1), values[(k + 1) % m]);
        increments.push(phase_increment(&poly, r, a, b, 0)?);
    }
    let winding = compensated_sum(&mut increments) / TAU;
    let n = winding.round();
    if (winding - n).abs() > 1e-3 || n < 0.0 {
        return Err(proximity_error(r));
    }
    Ok(n as usize)
}

/// `N(r, a) = Σ_{0<|ρ|≤r} log(r/|ρ|) + n(0, a) log r`.
pub fn counting_n(zeros: &ZeroSet, r: f64) -> Result<f64> {
    check_radius(r)?;
    if r > zeros.radius_cap * (1.0 + 1e-12) {
        return invalid(format!("r = {r} exceeds the zero set's radius cap {}", zeros.radius_cap));
    }
    let ln_r = r.ln();
    let mut terms: Vec<f64> = zeros.moduli.iter().take_while(|&&m| m <= r).map(|m| ln_r - m.ln()).collect();
    terms.push(zeros.origin_multiplicity as f64 * ln_r);
    Ok(compensated_sum(&mut terms))
}

fn mean_of(sample: &TruncatedSample, r: f64, a: Complex64, integrand: Integrand, ln_reference: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_radius(r)?;
    let (poly, big) = CirclePoly::normalized(&shifted(sample, a), r, Complex64::new(0.0, 0.0));
    if poly.is_zero() {
        return invalid("p - a is identically zero");
    }
    circle_mean(&poly, ln_reference - big, integrand, spec, r)
}

/// `(1/2π)∫ log|p(re^{iθ}) − a| dθ`.
pub fn circle_log_integral(sample: &TruncatedSample, r: f64, a: Complex64, spec: &QuadratureSpec) -> Result<f64> {
    mean_of(sample, r, a, Integrand::Log, 0.0, spec)
}

/// `m(r, a) = (1/2π)∫ log⁺|p(re^{iθ}) − a| dθ`.
pub fn proximity_m_value(sample: &TruncatedSample, r: f64, a: Complex64, spec: &QuadratureSpec) -> Result<f64> {
    mean_of(sample, r, a, Integrand::LogPlus, 0.0, spec)
}

/// `m(r, p) = (1/2π)∫ log⁺|p(re^{iθ})| dθ`.
pub fn proximity_m(sample: &TruncatedSample, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    proximity_m_value(sample, r, Complex64::new(0.0, 0.0), spec)
}

/// `T(r, p)`; a polynomial has no poles, so this is `m(r, p)`.
pub fn characteristic_t(sample: &TruncatedSample, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    proximity_m(sample, r, spec)
}

/// `log σ(r, p)` from the coefficients.
pub fn log_sigma_omega(sample: &TruncatedSample, r: f64) -> Result<f64> {
    check_radius(r)?;
    let ln_r = r.ln();
    let terms: Vec<f64> = sample
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, c)| if c.norm() == 0.0 { f64::NEG_INFINITY } else { 2.0 * (c.norm().ln() + j as f64 * ln_r) })
        .collect();
    let v = 0.5 * weighted_log_sum(&terms, |_| 1.0);
    if v == f64::NEG_INFINITY {
        return invalid("sample is identically zero");
    }
    Ok(v)
}

/// `σ(r, p) = (Σ|c_j|² r^{2j})^{1/2}`.
pub fn sigma_omega_parseval(sample: &TruncatedSample, r: f64) -> Result<f64> {
    log_sigma_omega(sample, r).map(f64::exp)
}

/// `log` of `((1/2π)∫|p(re^{iθ})|² dθ)^{1/2}` by the `(2N+1)`-node trapezoid, exact for degree `N`.
pub fn log_sigma_omega_integral(sample: &TruncatedSample, r: f64) -> Result<f64> {
    check_radius(r)?;
    let (poly, big) = CirclePoly::normalized(&sample.coefficients, r, Complex64::new(0.0, 0.0));
    if poly.is_zero() {
        return invalid("sample is identically zero");
    }
    let m = 2 * poly.degree() + 1;
    let mut squares: Vec<f64> = poly.grid(m).iter().map(|v| v.norm_sqr()).collect();
    Ok(big + 0.5 * (compensated_sum(&mut squares) / m as f64).ln())
}

pub fn sigma_omega_integral(sample: &TruncatedSample, r: f64) -> Result<f64> {
    log_sigma_omega_integral(sample, r).map(f64::exp)
}

/// `X_r = (1/2π)∫ |log|p(re^{iθ})/σ_f|| dθ`.
pub fn x_r_functional(sample: &TruncatedSample, sigma_f: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(sigma_f > 0.0 && sigma_f.is_finite()) {
        return invalid(format!("sigma_f must be positive and finite, got {sigma_f}"));
    }
    x_r_functional_log(sample, sigma_f.ln(), r, spec)
}

/// [`x_r_functional`] taking `log σ_f`, for normalizers beyond `f64` range.
pub fn x_r_functional_log(sample: &TruncatedSample, log_sigma_f: f64, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !log_sigma_f.is_finite() {
        return invalid("log sigma_f must be finite");
    }
    mean_of(sample, r, Complex64::new(0.0, 0.0), Integrand::AbsLogPow(1.0), log_sigma_f, spec)
}

/// `(1/2π)∫ |log|p(re^{iθ})/σ_f||^p dθ` for `p ≥ 1`; `p = 1` is `X_r`.
pub fn abs_log_moment(sample: &TruncatedSample, log_sigma_f: f64, r: f64, p: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("moment order must be at least 1, got {p}"));
    }
    if !log_sigma_f.is_finite() {
        return invalid("log sigma_f must be finite");
    }
    mean_of(sample, r, Complex64::new(0.0, 0.0), Integrand::AbsLogPow(p), log_sigma_f, spec)
}

/// `log|p(re^{iθ})|` at one angle; very negative near a root.
pub fn log_abs_at(sample: &TruncatedSample, r: f64, theta: f64) -> Result<f64> {
    check_radius(r)?;
    let (poly, big) = CirclePoly::normalized(&sample.coefficients, r, Complex64::new(0.0, 0.0));
    Ok(poly.eval(theta).norm().ln() + big)
}

/// `ln(u · Σ (j + 4)|c_j| r^j)`: the absolute accuracy with which `p` is
/// known on `|z| = r` once its coefficients are rounded to `f64`.
/// `log|p|` is meaningless where `|p|` is below this level.
pub fn log_rounding_floor(sample: &TruncatedSample, r: f64) -> Result<f64> {
    check_radius(r)?;
    let ln_r = r.ln();
    let terms: Vec<f64> = sample
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, c)| if c.norm() == 0.0 { f64::NEG_INFINITY } else { c.norm().ln() + j as f64 * ln_r })
        .collect();
    Ok(weighted_log_sum(&terms, |j| (j + 4) as f64) + f64::EPSILON.ln())
}

/// `|log|c(0)| + N(r, 0) − (1/2π)∫ log|p(re^{iθ})| dθ|`; zero up to rounding.
pub fn jensen_residual(sample: &TruncatedSample, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let lhs = log_leading_coefficient(sample)? + counting_n(&find_zeros(sample, Complex64::new(0.0, 0.0), r)?, r)?;
    Ok((lhs - circle_log_integral(sample, r, Complex64::new(0.0, 0.0), spec)?).abs())
}

/// Runs `eval` at `r`, then at `r(1 + k·JITTER_STEP)` while it fails because a
/// root sits on the circle. Returns the value and the radius that worked.
pub fn with_radius_jitter<T>(r: f64, mut eval: impl FnMut(f64) -> Result<T>) -> Result<(T, f64)> {
    for k in 0..JITTER_ATTEMPTS {
        let rk = r * (1.0 + JITTER_STEP * k as f64);
        match eval(rk) {
            Ok(v) => return Ok((v, rk)),
            Err(e) if e.is_circle_root() => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::CircleRootProximity { r, threshold: CIRCLE_PROXIMITY, attempts: JITTER_ATTEMPTS })
}
