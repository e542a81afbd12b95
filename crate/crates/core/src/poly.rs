//! A polynomial restricted to a circle `|z| = r`, as a trigonometric polynomial in `θ`.

use std::cell::RefCell;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Below `|q| / Σ|s_j|` of this size, plain Horner has lost about four digits.
const ILL_CONDITIONED: f64 = 1e-4;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `c · r^j · 2^{-k}`, by direct multiplication when the intermediate power
/// is representable (a few ulps), else through logarithms.
fn scaled_term(c: Complex64, r: f64, j: usize, k: i32) -> Complex64 {
    let m = c.norm();
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ln_power = j as f64 * r.ln();
    if ln_power.abs() < 600.0 && (m.ln() + ln_power).abs() < 600.0 && (k.abs() as f64) < 1000.0 {
        let power = r.powi(j as i32);
        let v = c * power;
        return Complex64::new(ldexp(v.re, -k), ldexp(v.im, -k));
    }
    Complex64::from_polar((m.ln() + ln_power - k as f64 * std::f64::consts::LN_2).exp(), c.arg())
}

/// `x · 2^e` without intermediate overflow for moderate `e`.
fn ldexp(x: f64, e: i32) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e)
}

/// `c_j r^j` without intermediate overflow of `r^j`.
pub fn scaled_coefficients(coeffs: &[Complex64], r: f64) -> Vec<Complex64> {
    coeffs.iter().enumerate().map(|(j, c)| scaled_term(*c, r, j, 0)).collect()
}

/// `θ ↦ p(r e^{iθ}) − a`, stored as `Σ s_j e^{ijθ}` with `s_j = c_j r^j` (and `s_0` shifted by `−a`).
#[derive(Debug, Clone)]
pub struct CirclePoly {
    s: Vec<Complex64>,
    scale: f64,
    offset: f64,
}

impl CirclePoly {
    pub fn new(coeffs: &[Complex64], r: f64, a: Complex64) -> Self {
        let mut s = scaled_coefficients(coeffs, r);
        if s.is_empty() {
            s.push(Complex64::new(0.0, 0.0));
        }
        s[0] -= a;
        let scale = s.iter().map(|c| c.norm()).sum();
        CirclePoly { s, scale, offset: a.norm() }
    }

    /// Same polynomial divided by `e^L`, `L` a multiple of `ln 2` near
    /// `max(ln|c_j r^j|, ln|a|)`, so no value overflows; returns `L` alongside.
    /// `log|p − a| = log|q| + L`.
    pub fn normalized(coeffs: &[Complex64], r: f64, a: Complex64) -> (Self, f64) {
        let ln_r = r.ln();
        let ln_a = if a.norm() == 0.0 { f64::NEG_INFINITY } else { a.norm().ln() };
        let big = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(j, c)| c.norm().ln() + j as f64 * ln_r)
            .fold(ln_a, f64::max);
        let k = if big.is_finite() { (big / std::f64::consts::LN_2).round() as i32 } else { 0 };
        let mut s: Vec<Complex64> = coeffs.iter().enumerate().map(|(j, c)| scaled_term(*c, r, j, k)).collect();
        if s.is_empty() {
            s.push(Complex64::new(0.0, 0.0));
        }
        let a_scaled = scaled_term(a, 1.0, 0, k);
        s[0] -= a_scaled;
        let scale = s.iter().map(|c| c.norm()).sum();
        (CirclePoly { s, scale, offset: a_scaled.norm() }, k as f64 * std::f64::consts::LN_2)
    }

    /// True when every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.s.iter().all(|c| c.norm() == 0.0)
    }

    pub fn degree(&self) -> usize {
        self.s.len() - 1
    }

    /// `Σ |s_j|`, the natural magnitude for rounding errors on the circle.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `|a|`, the modulus of the target value subtracted from `p`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Value at `θ`. Horner in working precision, repeated in compensated
    /// arithmetic when cancellation would leave fewer than ~12 correct digits.
    pub fn eval(&self, theta: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, theta);
        let v = self.s.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c);
        if v.norm() >= ILL_CONDITIONED * self.scale {
            v
        } else {
            self.eval_compensated(w)
        }
    }

    /// Compensated Horner: the result is as accurate as Horner run in twice
    /// the working precision.
    pub fn eval_compensated(&self, w: Complex64) -> Complex64 {
        let mut iter = self.s.iter().rev();
        let mut hi = match iter.next() {
            Some(c) => *c,
            None => return Complex64::new(0.0, 0.0),
        };
        let mut lo = Complex64::new(0.0, 0.0);
        for c in iter {
            let (p1, e1) = two_prod(hi.re, w.re);
            let (p2, e2) = two_prod(hi.im, w.im);
            let (p3, e3) = two_prod(hi.re, w.im);
            let (p4, e4) = two_prod(hi.im, w.re);
            let (re, e5) = two_sum(p1, -p2);
            let (im, e6) = two_sum(p3, p4);
            let (re, e7) = two_sum(re, c.re);
            let (im, e8) = two_sum(im, c.im);
            lo = lo * w + Complex64::new(e1 - e2 + e5 + e7, e3 + e4 + e6 + e8);
            hi = Complex64::new(re, im);
        }
        hi + lo
    }

    /// Value and `d/dθ` of the value.
    pub fn eval_with_derivative(&self, theta: f64) -> (Complex64, Complex64) {
        let w = Complex64::from_polar(1.0, theta);
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for (j, c) in self.s.iter().enumerate().rev() {
            v = v * w + c;
            d = d * w + c * j as f64;
        }
        (v, d * Complex64::i())
    }

    /// Values at `θ_k = 2πk/m`, `k = 0..m`, by an inverse FFT of the folded coefficients.
    pub fn grid(&self, m: usize) -> Vec<Complex64> {
        assert!(m > 0);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in self.s.iter().enumerate() {
            buf[j % m] += c;
        }
        PLANNER.with(|p| {
            let fft = p.borrow_mut().plan_fft_inverse(m);
            fft.process(&mut buf);
        });
        buf
    }

    /// `dq/dθ` at the same nodes as [`CirclePoly::grid`].
    pub fn derivative_grid(&self, m: usize) -> Vec<Complex64> {
        assert!(m > 0);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in self.s.iter().enumerate() {
            buf[j % m] += c * Complex64::new(0.0, j as f64);
        }
        PLANNER.with(|p| {
            let fft = p.borrow_mut().plan_fft_inverse(m);
            fft.process(&mut buf);
        });
        buf
    }

    pub fn node(m: usize, k: usize) -> f64 {
        TAU * k as f64 / m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_matches_horner() {
        let coeffs: Vec<Complex64> = (0..23)
            .map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos()))
            .collect();
        let p = CirclePoly::new(&coeffs, 1.3, Complex64::new(0.2, -0.1));
        for &m in &[7usize, 16, 64, 101] {
            let g = p.grid(m);
            for (k, v) in g.iter().enumerate() {
                let h = p.eval(CirclePoly::node(m, k));
                assert!((v - h).norm() <= 1e-11 * p.scale(), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn compensated_horner_survives_cancellation() {
        // (1 + z)^20 with exact binomial coefficients, near z = -1 where the
        // terms reach 2e5 and the value is about 1e-20
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for j in 1..=20 {
            let prev = c[j - 1].re;
            c.push(Complex64::new(prev * (21 - j) as f64 / j as f64, 0.0));
        }
        let p = CirclePoly::new(&c, 1.0, Complex64::new(0.0, 0.0));
        let theta = std::f64::consts::PI - 0.1;
        let w = Complex64::from_polar(1.0, theta);
        let exact = (Complex64::new(1.0, 0.0) + w).powi(20);
        let v = p.eval(theta);
        assert!((v - exact).norm() <= 1e-6 * exact.norm(), "{v} vs {exact}");
    }

    #[test]
    fn derivative_matches_difference() {
        let coeffs = [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 1.0), Complex64::new(0.5, 0.5)];
        let p = CirclePoly::new(&coeffs, 2.0, Complex64::new(0.0, 0.0));
        let (_, d) = p.eval_with_derivative(0.4);
        let h = 1e-6;
        let fd = (p.eval(0.4 + h) - p.eval(0.4 - h)) / (2.0 * h);
        assert_relative_eq!(d.re, fd.re, max_relative = 1e-7);
        assert_relative_eq!(d.im, fd.im, max_relative = 1e-7);
    }

    #[test]
    fn derivative_grid_matches_pointwise() {
        let coeffs: Vec<Complex64> = (0..9).map(|j| Complex64::new(1.0 / (j + 1) as f64, j as f64 * 0.1)).collect();
        let p = CirclePoly::new(&coeffs, 0.8, Complex64::new(0.0, 0.0));
        let g = p.derivative_grid(32);
        for (k, v) in g.iter().enumerate() {
            let (_, d) = p.eval_with_derivative(CirclePoly::node(32, k));
            assert!((v - d).norm() < 1e-12);
        }
    }

    #[test]
    fn normalized_keeps_log_modulus() {
        let coeffs = [Complex64::new(1.0, 0.0), Complex64::new(3.0, 1.0), Complex64::new(-2.0, 0.5)];
        let a = Complex64::new(0.7, -0.2);
        let plain = CirclePoly::new(&coeffs, 1.7, a);
        let (norm, shift) = CirclePoly::normalized(&coeffs, 1.7, a);
        for &t in &[0.0, 1.0, 2.5] {
            assert_relative_eq!(plain.eval(t).norm().ln(), norm.eval(t).norm().ln() + shift, max_relative = 1e-13);
        }
        let (huge, shift) = CirclePoly::normalized(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], 1e300, Complex64::new(0.0, 0.0));
        assert!(!huge.is_zero());
        assert!((shift - 300.0 * 10f64.ln()).abs() <= 0.5 * std::f64::consts::LN_2);
        assert_relative_eq!(huge.eval(0.3).norm().ln() + shift, 300.0 * 10f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn scaled_coefficients_survive_huge_powers() {
        let c = [Complex64::new(1e-300, 0.0); 2];
        let s = scaled_coefficients(&[c[0], c[1], Complex64::new(1e-250, 0.0)], 1e150);
        assert_relative_eq!(s[2].re, 1e50, max_relative = 1e-12);
    }
}
