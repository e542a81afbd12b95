//! Circle means `(1/2π)∫ g(log|p(re^{iθ}) − a|) dθ`.
//!
//! Smooth integrands (`log|q|` with no root near the circle) go through the
//! equispaced trapezoid rule with global doubling, which converges
//! geometrically for periodic analytic integrands. When a node is nearly a
//! root, when doubling stalls, or when the integrand has a kink (`log⁺`,
//! `|log|`), the circle is cut into panels that are integrated by
//! Gauss–Legendre with local dyadic bisection; kinks are located first and
//! become panel boundaries.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::CirclePoly;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Initial node count; `None` means `2·degree + 64`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_nodes: Option<usize>,
    pub max_refinement_depth: usize,
    pub abs_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { base_nodes: None, max_refinement_depth: 12, abs_tolerance: 1e-9 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.base_nodes {
            if n < 16 {
                return invalid(format!("base_nodes must be at least 16, got {n}"));
            }
        }
        if !(self.abs_tolerance > 0.0 && self.abs_tolerance.is_finite()) {
            return invalid("abs_tolerance must be positive");
        }
        if self.max_refinement_depth == 0 {
            return invalid("max_refinement_depth must be at least 1");
        }
        Ok(())
    }

    pub fn nodes_for(&self, degree: usize) -> usize {
        self.base_nodes.unwrap_or(2 * degree + 64)
    }
}

/// What is averaged over the circle, as a function of `u = log|q| − shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrand {
    Log,
    LogPlus,
    /// `|u|^p`, `p ≥ 1`.
    AbsLogPow(f64),
}

impl Integrand {
    fn apply(self, u: f64) -> f64 {
        match self {
            Integrand::Log => u,
            Integrand::LogPlus => u.max(0.0),
            Integrand::AbsLogPow(p) => {
                if p == 1.0 {
                    u.abs()
                } else {
                    u.abs().powf(p)
                }
            }
        }
    }

    fn has_kink(self) -> bool {
        !matches!(self, Integrand::Log)
    }
}

const GL_ORDER: usize = 10;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(mid + half * xi);
    }
    s * half
}

struct PanelBudget {
    tol: f64,
    floor: f64,
    max_depth: usize,
}

fn adaptive_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: usize, budget: &PanelBudget) -> std::result::Result<f64, f64> {
    let mid = 0.5 * (a + b);
    let left = gl_panel(f, a, mid);
    let right = gl_panel(f, mid, b);
    let refined = left + right;
    let change = (refined - whole).abs();
    let allowed = (budget.tol * (b - a) / TAU).max(budget.floor);
    if refined.is_finite() && change <= allowed {
        return Ok(refined);
    }
    if depth >= budget.max_depth || mid <= a || mid >= b {
        return Err(if change.is_finite() { change } else { f64::INFINITY });
    }
    let l = adaptive_panel(f, a, mid, left, depth + 1, budget)?;
    let r = adaptive_panel(f, mid, b, right, depth + 1, budget)?;
    Ok(l + r)
}

/// Root of a continuous `g` on `[a, b]` with `g(a)·g(b) < 0` (Illinois variant of regula falsi).
fn bracket_root(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * gb - b * ga) / (gb - ga);
        let c = if c.is_finite() && c > a && c < b { c } else { 0.5 * (a + b) };
        let gc = g(c);
        if gc == 0.0 || (b - a) < 1e-15 {
            return c;
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// `(1/2π) ∫₀^{2π} g(log|q(θ)| − shift) dθ`.
pub fn circle_mean(poly: &CirclePoly, shift: f64, integrand: Integrand, spec: &QuadratureSpec, r: f64) -> Result<f64> {
    spec.validate()?;
    let m0 = spec.nodes_for(poly.degree()).max(16);
    let near_zero = (1e-6 * (1.0 + poly.offset())).max(1e-8 * poly.scale());

    if !integrand.has_kink() {
        if let Some(v) = trapezoid_log(poly, shift, m0, near_zero, spec)? {
            return Ok(v);
        }
    }
    panel_mean(poly, shift, integrand, m0, spec, r)
}

/// Trapezoid with global doubling; `None` when the integrand is not smooth
/// enough on this grid family and the panel method should take over.
fn trapezoid_log(poly: &CirclePoly, shift: f64, m0: usize, near_zero: f64, spec: &QuadratureSpec) -> Result<Option<f64>> {
    // Doubling past this point costs more than local bisection.
    let max_doublings = spec.max_refinement_depth.min(4);
    let mut previous: Option<f64> = None;
    let mut m = m0;
    for _ in 0..=max_doublings {
        let values = poly.grid(m);
        let mut logs = Vec::with_capacity(m);
        for v in &values {
            let a = v.norm();
            if a < near_zero || !a.is_finite() {
                return Ok(None);
            }
            logs.push(a.ln() - shift);
        }
        let mean = crate::series::compensated_sum(&mut logs) / m as f64;
        if let Some(p) = previous {
            if (mean - p).abs() < spec.abs_tolerance {
                return Ok(Some(mean));
            }
        }
        previous = Some(mean);
        m *= 2;
    }
    Ok(None)
}

fn panel_mean(poly: &CirclePoly, shift: f64, integrand: Integrand, m0: usize, spec: &QuadratureSpec, r: f64) -> Result<f64> {
    let u = |theta: f64| poly.eval(theta).norm().ln() - shift;
    let g = |theta: f64| integrand.apply(u(theta));
    let h = TAU / m0 as f64;

    // panel boundaries, with kinks of the integrand inserted
    let mut cuts: Vec<f64> = Vec::with_capacity(m0 + 1);
    let mut u_prev = u(0.0);
    cuts.push(0.0);
    for k in 1..=m0 {
        let theta = if k == m0 { TAU } else { k as f64 * h };
        let u_next = u(theta);
        if integrand.has_kink() && u_prev.is_finite() && u_next.is_finite() && u_prev * u_next < 0.0 {
            let a = cuts.last().copied().unwrap_or(0.0).max(theta - h);
            let root = bracket_root(&u, a, theta, u_prev, u_next);
            if root > a && root < theta {
                cuts.push(root);
            }
        }
        cuts.push(theta);
        u_prev = u_next;
    }

    let budget = PanelBudget {
        tol: spec.abs_tolerance,
        floor: spec.abs_tolerance / 64.0,
        max_depth: 4 * spec.max_refinement_depth,
    };
    let mut pieces = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let whole = gl_panel(&g, a, b);
        match adaptive_panel(&g, a, b, whole, 0, &budget) {
            Ok(v) => pieces.push(v),
            Err(change) => {
                return Err(Error::QuadratureDivergence { r, depth: budget.max_depth, last_change: change });
            }
        }
    }
    Ok(crate::series::compensated_sum(&mut pieces) / TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
        // ∫_{-1}^{1} x^18 dx = 2/19
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(18)).sum();
        assert_relative_eq!(s, 2.0 / 19.0, max_relative = 1e-13);
    }

    #[test]
    fn trapezoid_path_for_smooth_log() {
        // log|z - 0.3| on |z| = 1 averages to 0
        let p = CirclePoly::new(&[Complex64::new(-0.3, 0.0), Complex64::new(1.0, 0.0)], 1.0, Complex64::new(0.0, 0.0));
        let v = circle_mean(&p, 0.0, Integrand::Log, &QuadratureSpec::default(), 1.0).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn panel_path_for_root_on_circle() {
        // log|e^{iθ} - 1| averages to 0
        let p = CirclePoly::new(&[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)], 1.0, Complex64::new(0.0, 0.0));
        let v = circle_mean(&p, 0.0, Integrand::Log, &QuadratureSpec::default(), 1.0).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn kinked_integrand_matches_closed_form() {
        // log⁺|2 + e^{iθ}| = log|2 + e^{iθ}| except where |2+e^{iθ}| < 1: never; mean = log 2
        let p = CirclePoly::new(&[Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)], 1.0, Complex64::new(0.0, 0.0));
        let v = circle_mean(&p, 0.0, Integrand::LogPlus, &QuadratureSpec::default(), 1.0).unwrap();
        assert_relative_eq!(v, 2f64.ln(), max_relative = 1e-10);
        // with shift log 2: |log|1 + e^{iθ}/2||
        let shifted = circle_mean(&p, 2f64.ln(), Integrand::AbsLogPow(1.0), &QuadratureSpec::default(), 1.0).unwrap();
        // brute force midpoint rule on a dense grid
        let n = 1 << 20;
        let brute: f64 = (0..n)
            .map(|k| {
                let t = TAU * (k as f64 + 0.5) / n as f64;
                (Complex64::new(1.0, 0.0) + Complex64::from_polar(0.5, t)).norm().ln().abs()
            })
            .sum::<f64>()
            / n as f64;
        assert!((shifted - brute).abs() < 1e-8, "{shifted} vs {brute}");
    }
}
