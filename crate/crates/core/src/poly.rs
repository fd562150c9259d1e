//! Dense real polynomials in the monomial basis.

use serde::{Deserialize, Serialize};

/// `coeffs[k]` multiplies `u^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `scale * prod (u - r)` over the given roots.
    pub fn from_roots(scale: f64, roots: &[f64]) -> Self {
        let mut p = Self::constant(scale);
        for &r in roots {
            p = p.mul(&Self::new(vec![-r, 1.0]));
        }
        p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Self::new(out)
    }

    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(0.0)
                        + other.coeffs.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `q(w) = p(a + b w)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        let lin = Self::new(vec![a, b]);
        self.coeffs.iter().rev().fold(Self::zero(), |acc, &c| {
            acc.mul(&lin).add(&Self::constant(c))
        })
    }

    /// Maximum of `|p|` over `[a, b]`, located through the critical points.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        let mut best = self.eval(a).abs().max(self.eval(b).abs());
        for r in self.derivative().roots_in(a, b, 2000) {
            best = best.max(self.eval(r).abs());
        }
        best
    }

    /// Maximum of `p` over `[a, b]`.
    pub fn max_on(&self, a: f64, b: f64) -> f64 {
        let mut best = self.eval(a).max(self.eval(b));
        for r in self.derivative().roots_in(a, b, 2000) {
            best = best.max(self.eval(r));
        }
        best
    }

    /// Real roots in `[a, b]`: sign changes on a uniform grid of `grid`
    /// cells, refined by bisection and polished with Newton.
    ///
    /// Roots of even multiplicity that do not change sign are only found if
    /// they hit a grid node exactly.
    pub fn roots_in(&self, a: f64, b: f64, grid: usize) -> Vec<f64> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let dp = self.derivative();
        let mut roots: Vec<f64> = Vec::new();
        let node = |i: usize| a + (b - a) * i as f64 / grid as f64;
        let mut x0 = node(0);
        let mut f0 = self.eval(x0);
        if f0 == 0.0 {
            roots.push(x0);
        }
        for i in 1..=grid {
            let x1 = node(i);
            let f1 = self.eval(x1);
            if f1 == 0.0 {
                roots.push(x1);
            } else if f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
                roots.push(self.refine(x0, x1, f0, &dp));
            }
            x0 = x1;
            f0 = f1;
        }
        roots.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
        roots
    }

    fn refine(&self, mut lo: f64, mut hi: f64, mut flo: f64, dp: &Polynomial) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 {
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..50 {
            let d = dp.eval(x);
            if d == 0.0 {
                break;
            }
            let step = self.eval(x) / d;
            let next = x - step;
            if !(lo - 1e-9..=hi + 1e-9).contains(&next) {
                break;
            }
            x = next;
            if step.abs() < 1e-15 {
                break;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_roots_and_eval() {
        let p = Polynomial::from_roots(2.0, &[0.25, 0.5]);
        assert_eq!(p.coeffs(), &[0.25, -1.5, 2.0]);
        assert_eq!(p.eval(0.25), 0.0);
    }

    #[test]
    fn calculus() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 6.0]);
        // int_0^1 (1 - 2u + 3u^2) du = 1 - 1 + 1
        assert!((p.integrate(0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn roots_are_polished() {
        let p = Polynomial::from_roots(-3.0, &[0.25, 0.45, 0.75]);
        let r = p.roots_in(0.0, 1.0, 10_000);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([0.25, 0.45, 0.75]) {
            assert!((x - e).abs() < 1e-14, "{x} vs {e}");
        }
    }

    #[test]
    fn affine_composition() {
        let p = Polynomial::from_roots(1.0, &[0.25, 0.75]);
        let q = p.compose_affine(0.25, -1.0);
        for w in [0.0, 0.1, 0.5, -0.3] {
            assert!((q.eval(w) - p.eval(0.25 - w)).abs() < 1e-15);
        }
    }

    #[test]
    fn trailing_zeros_trimmed() {
        assert_eq!(Polynomial::new(vec![1.0, 0.0, 0.0]).degree(), 0);
        assert!(Polynomial::new(vec![]).is_zero());
    }
}
