//! Traveling waves `U'' + c U' + f(U) = 0` with `U(-inf) = alpha_+`,
//! `U(0) = alpha_*`, `U(+inf) = alpha_-`.
//!
//! The speed is found by bisection on the overshoot/undershoot behaviour of
//! the unstable manifold of `(alpha_+, 0)`. The profile is then assembled
//! from two branches that are each integrated in their stable direction: the
//! left half forward from `alpha_+`, the right half backward from `alpha_-`.
//! Both branches work with the gap to their end state, so the exponentially
//! small tails keep full relative precision.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{dopri_integrate, find_root, rk4_step, Flow};
use crate::poly::Polynomial;
use crate::rates::ReactionPolynomial;
use crate::stats::linear_fit;

/// Offset of the shooting start point along the unstable eigenvector.
pub const MANIFOLD_OFFSET: f64 = 1e-8;

/// Local tolerance of the adaptive shooting integrator.
pub const SHOOTING_TOLERANCE: f64 = 1e-10;

/// Largest rate of the linearisation at `(alpha, 0)`:
/// `-c/2 + sqrt(c^2/4 - f'(alpha))`.
pub fn unstable_rate(c: f64, fprime: f64) -> f64 {
    -0.5 * c + (0.25 * c * c - fprime).sqrt()
}

/// Modulus of the stable rate of the linearisation at `(alpha, 0)`:
/// `c/2 + sqrt(c^2/4 - f'(alpha))`.
pub fn stable_rate(c: f64, fprime: f64) -> f64 {
    0.5 * c + (0.25 * c * c - fprime).sqrt()
}

/// Outcome of one shot from `alpha_+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shot {
    /// Passes below `alpha_-`: the trial speed is too small.
    Overshoot,
    /// Turns back (`U' >= 0`) before reaching `alpha_-`: too large.
    Undershoot,
}

/// Classifies the unstable manifold of `(alpha_+, 0)` at trial speed `c`.
pub fn shoot(f: &ReactionPolynomial, c: f64) -> Shot {
    let (am, ap) = (f.alpha_minus, f.alpha_plus);
    let margin = (f.alpha_star - am) / 10.0;
    let mu = unstable_rate(c, f.derivative_at(ap));
    let rhs = |y: &[f64; 2]| [y[1], -c * y[1] - f.eval(y[0])];
    let y0 = [ap - MANIFOLD_OFFSET, -MANIFOLD_OFFSET * mu];
    let slowest = mu.min(unstable_rate(c, f.derivative_at(am))).max(1e-3);
    let z_limit = 200.0 / slowest + (1.0 / MANIFOLD_OFFSET).ln() / mu;
    let mut outcome = None;
    let (_, y) = dopri_integrate(&rhs, y0, z_limit, SHOOTING_TOLERANCE, |_, _, _, y| {
        if y[0] < am - margin {
            outcome = Some(Shot::Overshoot);
            Flow::Stop
        } else if y[1] >= 0.0 {
            outcome = Some(Shot::Undershoot);
            Flow::Stop
        } else {
            Flow::Continue
        }
    });
    outcome.unwrap_or_else(|| {
        // Still lingering near the saddle at alpha_-: the sign of the
        // unstable component decides on which side the orbit leaves.
        let fm = f.derivative_at(am);
        let mu_minus = -stable_rate(c, fm);
        let a = y[1] - mu_minus * (y[0] - am);
        if a < 0.0 {
            Shot::Overshoot
        } else {
            Shot::Undershoot
        }
    })
}

/// Wave speed by bisection on [`shoot`].
///
/// The bracket is `[-c_max, c_max]` with `c_max = 2 (alpha_+ - alpha_-)
/// max sqrt|f'|` over `[alpha_-, alpha_+]`, widened by a factor two at most
/// three times.
pub fn wave_speed(f: &ReactionPolynomial) -> Result<f64> {
    let lip = f.lipschitz_on(f.alpha_minus, f.alpha_plus);
    let mut c_max = 2.0 * (f.alpha_plus - f.alpha_minus) * lip.sqrt();
    let mut widenings = 0;
    while shoot(f, -c_max) != Shot::Overshoot || shoot(f, c_max) != Shot::Undershoot {
        widenings += 1;
        if widenings > 3 {
            return Err(Error::Bracketing(format!(
                "no sign change of the shooting outcome on [-{c_max}, {c_max}]"
            )));
        }
        c_max *= 2.0;
    }
    let (mut lo, mut hi) = (-c_max, c_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi || hi - lo <= 1e-14 * c_max {
            break;
        }
        match shoot(f, mid) {
            Shot::Overshoot => lo = mid,
            Shot::Undershoot => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Discretised wave on the uniform grid `z_i = (i - n) h`, `i = 0..=2n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub c_star: f64,
    pub h: f64,
    /// Half width `Z = n h`.
    pub z_max: f64,
    pub alpha_minus: f64,
    pub alpha_star: f64,
    pub alpha_plus: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// `alpha_+ - U`, accurate in the left tail.
    pub gap_plus: Vec<f64>,
    /// `U - alpha_-`, accurate in the right tail.
    pub gap_minus: Vec<f64>,
    /// Analytic decay rate of `alpha_+ - U` as `z -> -inf`.
    pub rate_left: f64,
    /// Analytic decay rate of `U - alpha_-` as `z -> +inf`.
    pub rate_right: f64,
    /// Difference of `U'(0)` between the two branches.
    pub junction_mismatch: f64,
    /// `max |U'' + c U' + f(U)|` over the grid interior.
    pub residual: f64,
    /// `max |f|` over `[alpha_-, alpha_+]`, the residual's natural scale.
    pub f_scale: f64,
    #[serde(skip)]
    coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveOptions {
    /// Requested half width `Z`; rounded up to a multiple of `h`.
    pub z_max: f64,
    pub h: f64,
    /// Largest admissible tail gap at `+-Z`.
    pub tol: f64,
}

impl WaveOptions {
    /// Half width with tail gaps near `1e-11` and about 25 points per unit
    /// of the faster decay length.
    pub fn automatic(f: &ReactionPolynomial) -> Result<Self> {
        let c = wave_speed(f)?;
        let left = unstable_rate(c, f.derivative_at(f.alpha_plus));
        let right = stable_rate(c, f.derivative_at(f.alpha_minus));
        Ok(Self {
            z_max: 25.0 / left.min(right),
            h: 0.04 / left.max(right),
            tol: 1e-8,
        })
    }
}

/// Solves for the speed and profile.
pub fn solve_wave(f: &ReactionPolynomial, z_max: f64, h: f64, tol: f64) -> Result<WaveProfile> {
    if !(h > 0.0 && z_max > 0.0 && tol > 0.0) {
        return Err(Error::Domain("Z, h and tol must be positive".into()));
    }
    let n = (z_max / h).ceil() as usize;
    if n < 10 {
        return Err(Error::DomainSize(format!(
            "Z/h = {} grid points per side is too few",
            n
        )));
    }
    let c = wave_speed(f)?;
    let (am, a_star, ap) = (f.alpha_minus, f.alpha_star, f.alpha_plus);
    let rate_left = unstable_rate(c, f.derivative_at(ap));
    let rate_right = stable_rate(c, f.derivative_at(am));
    let poly = f.polynomial();

    // Left branch in W = alpha_+ - U: W'' = -c W' + f(alpha_+ - W).
    let g_left = poly.compose_affine(ap, -1.0);
    let left = branch(&g_left, 1.0, c, rate_left, h, n, ap - a_star)?;
    // Right branch in W = U - alpha_-, integrated backward from z = n h:
    // W'' = -c W' - f(alpha_- + W).
    let g_right = poly.compose_affine(am, 1.0).scale(-1.0);
    let right = branch(&g_right, -1.0, c, rate_right, h, n, a_star - am)?;

    let mut u = Vec::with_capacity(2 * n + 1);
    let mut du = Vec::with_capacity(2 * n + 1);
    let mut gap_plus = Vec::with_capacity(2 * n + 1);
    let mut gap_minus = Vec::with_capacity(2 * n + 1);
    for &[w, p] in &left[..n] {
        u.push(ap - w);
        du.push(-p);
        gap_plus.push(w);
        gap_minus.push((ap - am) - w);
    }
    let slope_left = -left[n][1];
    let slope_right = right[n][1];
    u.push(a_star);
    du.push(0.5 * (slope_left + slope_right));
    gap_plus.push(ap - a_star);
    gap_minus.push(a_star - am);
    for &[w, p] in right[..n].iter().rev() {
        u.push(am + w);
        du.push(p);
        gap_plus.push((ap - am) - w);
        gap_minus.push(w);
    }

    for i in 0..2 * n {
        if !(du[i] < 0.0) || u[i + 1] >= u[i] {
            return Err(Error::Domain(format!(
                "profile is not strictly decreasing at z = {}",
                (i as f64 - n as f64) * h
            )));
        }
    }
    let tail = gap_plus[0].max(gap_minus[2 * n]);
    if tail > tol {
        return Err(Error::DomainSize(format!(
            "tail gap {tail:e} at |z| = {} exceeds {tol:e}; increase Z",
            n as f64 * h
        )));
    }

    let mut profile = WaveProfile {
        c_star: c,
        h,
        z_max: n as f64 * h,
        alpha_minus: am,
        alpha_star: a_star,
        alpha_plus: ap,
        u,
        du,
        gap_plus,
        gap_minus,
        rate_left,
        rate_right,
        junction_mismatch: (slope_left - slope_right).abs(),
        residual: 0.0,
        f_scale: f.max_abs_on(am, ap),
        coefficients: f.coefficients.clone(),
    };
    profile.residual = profile.max_residual();
    Ok(profile)
}

/// Integrates one branch with fixed RK4 steps of size `dir * h` from a point
/// on the linear manifold, choosing the offset so that the gap reaches
/// `target` exactly after `n` steps. Returns the `n + 1` states `(W, W')`.
fn branch(
    g: &Polynomial,
    dir: f64,
    c: f64,
    rate: f64,
    h: f64,
    n: usize,
    target: f64,
) -> Result<Vec<[f64; 2]>> {
    let rhs = |y: &[f64; 2]| [y[1], -c * y[1] + g.eval(y[0])];
    let run = |log_delta: f64| -> Vec<[f64; 2]> {
        let delta = log_delta.exp();
        let mut y = [delta, dir * rate * delta];
        let mut out = Vec::with_capacity(n + 1);
        out.push(y);
        for _ in 0..n {
            y = rk4_step(&rhs, &y, dir * h);
            out.push(y);
        }
        out
    };
    let mismatch = |x: f64| {
        let w = run(x)[n][0];
        if w > 0.0 && w.is_finite() {
            w.ln() - target.ln()
        } else if w.is_finite() {
            -1e3
        } else {
            1e3
        }
    };
    let guess = target.ln() - rate * n as f64 * h;
    if guess < -690.0 {
        return Err(Error::DomainSize(format!(
            "half width {} is too large for tail rate {rate}",
            n as f64 * h
        )));
    }
    let x = find_root(&mismatch, guess - 1.0, guess + 1.0, 1e-15)
        .ok_or_else(|| Error::Domain("could not place the wave branch on the grid".into()))?;
    Ok(run(x))
}

impl WaveProfile {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn z(&self, i: usize) -> f64 {
        (i as f64 - (self.len() / 2) as f64) * self.h
    }

    pub fn z_grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.z(i)).collect()
    }

    fn f(&self, u: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * u + c)
    }

    fn max_residual(&self) -> f64 {
        let n = self.len();
        let h = self.h;
        (2..n - 2)
            .map(|i| {
                let d2 = (-self.du[i + 2] + 8.0 * self.du[i + 1] - 8.0 * self.du[i - 1]
                    + self.du[i - 2])
                    / (12.0 * h);
                (d2 + self.c_star * self.du[i] + self.f(self.u[i])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `U''` from the equation, `-c U' - f(U)`.
    pub fn second_derivative(&self, u: f64, du: f64) -> f64 {
        -self.c_star * du - self.f(u)
    }

    /// `(U(z), U'(z), U''(z))` for any real `z`: monotone cubic Hermite
    /// interpolation on the grid and exact exponential tails beyond `+-Z`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        let n = self.len() - 1;
        if z <= -self.z_max {
            let e = (self.rate_left * (z + self.z_max)).exp();
            let gap = self.gap_plus[0] * e;
            let d = -gap * self.rate_left;
            return (self.alpha_plus - gap, d, d * self.rate_left);
        }
        if z >= self.z_max {
            let e = (-self.rate_right * (z - self.z_max)).exp();
            let gap = self.gap_minus[n] * e;
            let d = -gap * self.rate_right;
            return (self.alpha_minus + gap, d, -d * self.rate_right);
        }
        let s = (z + self.z_max) / self.h;
        let i = (s.floor() as usize).min(n - 1);
        let t = s - i as f64;
        let u = hermite(
            self.u[i],
            self.u[i + 1],
            self.du[i],
            self.du[i + 1],
            self.h,
            t,
            true,
        );
        let d2a = self.second_derivative(self.u[i], self.du[i]);
        let d2b = self.second_derivative(self.u[i + 1], self.du[i + 1]);
        let du = hermite(self.du[i], self.du[i + 1], d2a, d2b, self.h, t, false);
        (u, du, self.second_derivative(u, du))
    }

    pub fn value(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    /// CSV with columns `z,U,dU`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z,U,dU\n");
        for i in 0..self.len() {
            let _ = writeln!(
                s,
                "{:.12e},{:.17e},{:.17e}",
                self.z(i),
                self.u[i],
                self.du[i]
            );
        }
        s
    }

    /// Metadata without the grid arrays.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "c_star": self.c_star,
            "h": self.h,
            "z_max": self.z_max,
            "points": self.len(),
            "rate_left": self.rate_left,
            "rate_right": self.rate_right,
            "junction_mismatch": self.junction_mismatch,
            "residual": self.residual,
            "f_scale": self.f_scale,
        })
    }
}

/// Cubic Hermite on a cell of width `h` at fraction `t`; with `limit` the
/// slopes are restricted so the interpolant is monotone on the cell.
fn hermite(y0: f64, y1: f64, mut m0: f64, mut m1: f64, h: f64, t: f64, limit: bool) -> f64 {
    if limit {
        let delta = (y1 - y0) / h;
        if delta == 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            let (mut a, mut b) = (m0 / delta, m1 / delta);
            a = a.max(0.0);
            b = b.max(0.0);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                a *= tau;
                b *= tau;
            }
            m0 = a * delta;
            m1 = b * delta;
        }
    }
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub rate_left_fit: f64,
    pub rate_right_fit: f64,
    pub rate_left_theory: f64,
    pub rate_right_theory: f64,
    pub prefactor_left: f64,
    pub prefactor_right: f64,
    /// RMS residuals of the log-linear fits.
    pub fit_residual_left: f64,
    pub fit_residual_right: f64,
    /// `lambda` and `C` in `0 < -U'(z) <= C exp(-lambda |z|)`.
    pub lambda: f64,
    pub c_bound: f64,
    pub derivative_negative: bool,
    pub left_tail_monotone: bool,
    pub passed: bool,
}

/// Fits `log(alpha_+ - U)` on `[-Z, -Z/2]` and `log(U - alpha_-)` on
/// `[Z/2, Z]` and compares the slopes with the linearisation rates.
pub fn verify_tails(w: &WaveProfile) -> TailReport {
    let n = w.len() / 2;
    let half = n / 2;
    let (zl, yl): (Vec<f64>, Vec<f64>) = (0..=half).map(|i| (w.z(i), w.gap_plus[i].ln())).unzip();
    let (zr, yr): (Vec<f64>, Vec<f64>) = (2 * n - half..=2 * n)
        .map(|i| (w.z(i), w.gap_minus[i].ln()))
        .unzip();
    let fl = linear_fit(&zl, &yl);
    let fr = linear_fit(&zr, &yr);
    let rate_left_fit = fl.slope;
    let rate_right_fit = -fr.slope;
    let within = |fit: f64, th: f64| ((fit - th) / th).abs() < 0.05;
    let lambda = rate_left_fit.min(rate_right_fit);
    let derivative_negative = w.du.iter().all(|&d| d < 0.0);
    let c_bound = (0..w.len())
        .map(|i| -w.du[i] * (lambda * w.z(i).abs()).exp())
        .fold(0.0, f64::max);
    let left_tail_monotone = (0..n).all(|i| w.gap_plus[i] < w.gap_plus[i + 1]);
    let passed = within(rate_left_fit, w.rate_left)
        && within(rate_right_fit, w.rate_right)
        && fl.residual_rms < 1e-3
        && fr.residual_rms < 1e-3
        && derivative_negative
        && c_bound.is_finite()
        && left_tail_monotone;
    TailReport {
        rate_left_fit,
        rate_right_fit,
        rate_left_theory: w.rate_left,
        rate_right_theory: w.rate_right,
        prefactor_left: fl.intercept.exp(),
        prefactor_right: fr.intercept.exp(),
        fit_residual_left: fl.residual_rms,
        fit_residual_right: fr.residual_rms,
        lambda,
        c_bound,
        derivative_negative,
        left_tail_monotone,
        passed,
    }
}

/// Largest `sigma` with `U'(z) <= -sigma (beta + f'(U(z)))` on the grid.
///
/// Only grid points with `beta + f'(U) > 0` constrain `sigma`; elsewhere the
/// right-hand side is nonnegative and `U' < 0` satisfies the bound.
pub fn sigma_bound(w: &WaveProfile, beta: f64) -> f64 {
    let df = Polynomial::new(w.coefficients.clone()).derivative();
    w.u.iter()
        .zip(&w.du)
        .filter_map(|(&u, &d)| {
            let g = beta + df.eval(u);
            (g > 0.0).then(|| -d / g)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Whether `U' <= -sigma (beta + f'(U))` holds at every grid point.
pub fn sigma_admissible(w: &WaveProfile, beta: f64, sigma: f64) -> bool {
    let df = Polynomial::new(w.coefficients.clone()).derivative();
    w.u.iter()
        .zip(&w.du)
        .all(|(&u, &d)| d <= -sigma * (beta + df.eval(u)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_of_linearisation() {
        // mu^2 + c mu + f' = 0
        let (c, fp) = (0.3, -0.8);
        let mu = unstable_rate(c, fp);
        assert!((mu * mu + c * mu + fp).abs() < 1e-14);
        let nu = -stable_rate(c, fp);
        assert!((nu * nu + c * nu + fp).abs() < 1e-14);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |x: f64| x * x * x - 2.0 * x;
        let dp = |x: f64| 3.0 * x * x - 2.0;
        let v = hermite(p(1.0), p(1.5), dp(1.0), dp(1.5), 0.5, 0.3, false);
        assert!((v - p(1.15)).abs() < 1e-14);
    }
}
