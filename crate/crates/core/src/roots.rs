//! All roots of a complex polynomial.
//!
//! Degrees up to [`COMPANION_MAX_DEGREE`] take the eigenvalues of the balanced
//! companion matrix as starting points; larger degrees start from the Newton
//! polygon radii. Both are then refined by Aberth–Ehrlich iteration, which
//! keeps the approximations of distinct roots apart.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

pub const COMPANION_MAX_DEGREE: usize = 512;

const ABERTH_MAX_ITER: usize = 200;

/// Coefficients `e_k = d_k · s^k / norm`, computed in log space.
fn rescale(d: &[Complex64], s: f64) -> Vec<Complex64> {
    let ln_s = s.ln();
    let logs: Vec<f64> = d
        .iter()
        .enumerate()
        .map(|(k, c)| if c.norm() == 0.0 { f64::NEG_INFINITY } else { c.norm().ln() + k as f64 * ln_s })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    d.iter()
        .zip(&logs)
        .map(|(c, &l)| if l == f64::NEG_INFINITY { Complex64::new(0.0, 0.0) } else { Complex64::from_polar((l - max).exp(), c.arg()) })
        .collect()
}

/// Diagonal similarity by powers of two so row and column norms are comparable.
fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let norm1 = |z: Complex64| z.re.abs() + z.im.abs();
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += norm1(m[(j, i)]);
                    r += norm1(m[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r / f) < 0.95 * s * f {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

fn companion_eigenvalues(e: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = e.len() - 1;
    let lead = e[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        m[(0, k)] = -e[n - 1 - k] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return None;
    }
    balance(&mut m);
    let schur = Schur::try_new(m, 1e-15, 100 * n.max(10))?;
    let (_, t) = schur.unpack();
    let eig: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    if eig.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(eig)
    } else {
        None
    }
}

/// Starting points on circles whose radii come from the upper convex hull of
/// `(k, log|e_k|)`.
fn newton_polygon_guesses(e: &[Complex64]) -> Vec<Complex64> {
    let n = e.len() - 1;
    let pts: Vec<(f64, f64)> = e
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k as f64, c.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut guesses = Vec::with_capacity(n);
    let sigma = 0.7;
    for w in hull.windows(2) {
        let (k0, l0) = w[0];
        let (k1, l1) = w[1];
        let count = (k1 - k0) as usize;
        let radius = ((l0 - l1) / (k1 - k0)).exp();
        for i in 0..count {
            let angle = std::f64::consts::TAU * i as f64 / count as f64 + k0 / n as f64 * std::f64::consts::TAU + sigma;
            guesses.push(Complex64::from_polar(radius, angle));
        }
    }
    guesses
}

/// `p(w)/p'(w)`, evaluated through the reversed polynomial outside the unit disk.
pub(crate) fn newton_ratio(e: &[Complex64], w: Complex64) -> Complex64 {
    let n = e.len() - 1;
    if w.norm() <= 1.0 {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in e.iter().rev() {
            dp = dp * w + p;
            p = p * w + c;
        }
        p / dp
    } else {
        let y = w.inv();
        let mut q = Complex64::new(0.0, 0.0);
        let mut dq = Complex64::new(0.0, 0.0);
        for c in e.iter() {
            dq = dq * y + q;
            q = q * y + c;
        }
        // p(w) = w^n q(y), p'(w) = w^{n-1}(n q(y) - y q'(y))
        w / (Complex64::new(n as f64, 0.0) - y * dq / q)
    }
}

fn aberth(e: &[Complex64], roots: &mut [Complex64]) {
    let n = roots.len();
    let mut done = vec![false; n];
    for _ in 0..ABERTH_MAX_ITER {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = roots[i];
            let ratio = newton_ratio(e, zi);
            if !(ratio.re.is_finite() && ratio.im.is_finite()) {
                done[i] = true;
                continue;
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    sum += (zi - zj).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !(step.re.is_finite() && step.im.is_finite()) {
                done[i] = true;
                continue;
            }
            roots[i] = zi - step;
            if step.norm() <= 4.0 * f64::EPSILON * roots[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
}

/// Roots of `Σ d_k z^k` with `d_0 ≠ 0` and `d_n ≠ 0`, `n ≥ 1`, with multiplicity.
pub fn polynomial_roots(d: &[Complex64]) -> Vec<Complex64> {
    let n = d.len() - 1;
    debug_assert!(n >= 1 && d[0].norm() > 0.0 && d[n].norm() > 0.0);
    if n == 1 {
        return vec![-d[0] / d[1]];
    }
    // work in w = z / s with s the geometric mean of the root moduli
    let s = ((d[0].norm().ln() - d[n].norm().ln()) / n as f64).exp();
    let e = rescale(d, s);
    let mut roots = if n <= COMPANION_MAX_DEGREE {
        companion_eigenvalues(&e).unwrap_or_else(|| newton_polygon_guesses(&e))
    } else {
        newton_polygon_guesses(&e)
    };
    aberth(&e, &mut roots);
    roots.into_iter().map(|w| w * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        c
    }

    #[test]
    fn quadratic_roots() {
        let r = sorted(polynomial_roots(&[Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]));
        assert!((r[0] + 1.0).norm() < 1e-14 && (r[1] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn known_roots_recovered() {
        let truth: Vec<Complex64> = (0..25)
            .map(|k| Complex64::from_polar(0.5 + 0.1 * k as f64, 2.3 * k as f64))
            .collect();
        let found = polynomial_roots(&from_roots(&truth));
        for t in &truth {
            let best = found.iter().map(|f| (f - t).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "root {t} missed by {best}");
        }
    }

    #[test]
    fn aberth_path_handles_high_degree() {
        // z^600 - 1: roots of unity
        let mut d = vec![Complex64::new(0.0, 0.0); 601];
        d[0] = Complex64::new(-1.0, 0.0);
        d[600] = Complex64::new(1.0, 0.0);
        let found = polynomial_roots(&d);
        assert_eq!(found.len(), 600);
        for z in &found {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            let p = z.powu(600) - 1.0;
            assert!(p.norm() < 1e-10);
        }
        let mut angles: Vec<f64> = found.iter().map(|z| z.arg()).collect();
        angles.sort_by(f64::total_cmp);
        for w in angles.windows(2) {
            assert!(w[1] - w[0] > 1e-3, "duplicate roots");
        }
    }

    #[test]
    fn widely_scaled_coefficients() {
        // truncated exponential: coefficients spanning many orders of magnitude
        let d: Vec<Complex64> = (0..=80)
            .map(|j| Complex64::new((-statrs::function::gamma::ln_gamma(j as f64 + 1.0)).exp(), 0.0))
            .collect();
        let roots = polynomial_roots(&d);
        assert_eq!(roots.len(), 80);
        for z in &roots {
            let scale: f64 = d.iter().enumerate().map(|(k, c)| c.norm() * z.norm().powi(k as i32)).sum();
            let val: Complex64 = d.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
            assert!(val.norm() <= 1e-12 * scale, "residual {} at {z}", val.norm() / scale);
        }
    }
}
