//! Explicit solvers for `du/dt = D Delta_h u + R f(u)` on periodic grids,
//! with the two parameterisations used in the analysis:
//!
//! - the lattice problem on the discrete torus: `h = 1/N`, `D = 1/sqrt K`,
//!   `R = sqrt K`, nodes at `x/N`;
//! - the continuum problem: `h = 1/M`, `D = eps`, `R = 1/eps`, nodes at the
//!   cell centres `(i + 1/2)/M`.
//!
//! Both share one RK4 stepper. Values leaving the a priori bounds
//! `[u_- min alpha_-, u_+ max alpha_+]` by more than `1e-6` abort the run;
//! nothing is ever clamped.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::TorusGeometry;
use crate::rates::{DerivedConstants, ReactionPolynomial};

/// Slack allowed beyond the a priori bounds before a run is declared
/// unstable.
pub const BOUND_SLACK: f64 = 1e-6;

/// Values of `u^N` on the sites of the discrete torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    pub dim: usize,
    pub side: usize,
    pub values: Vec<f64>,
}

/// Values of `u^eps` at the cell centres of an `M^d` grid on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuumField {
    pub dim: usize,
    pub side: usize,
    pub values: Vec<f64>,
}

impl LatticeField {
    pub fn new(geometry: TorusGeometry, values: Vec<f64>) -> Result<Self> {
        check_len(geometry.dim(), geometry.side(), &values)?;
        Ok(Self {
            dim: geometry.dim(),
            side: geometry.side(),
            values,
        })
    }

    /// Field sampled from `u0` at the sites `x / N`.
    pub fn from_fn(geometry: TorusGeometry, u0: impl Fn(&[f64]) -> f64) -> Self {
        let values = sample_grid(geometry.dim(), geometry.side(), 0.0, u0);
        Self {
            dim: geometry.dim(),
            side: geometry.side(),
            values,
        }
    }

    pub fn geometry(&self) -> TorusGeometry {
        TorusGeometry::new(self.dim, self.side).expect("field built from a valid geometry")
    }
}

impl ContinuumField {
    pub fn new(dim: usize, side: usize, values: Vec<f64>) -> Result<Self> {
        check_len(dim, side, &values)?;
        Ok(Self { dim, side, values })
    }

    /// Field sampled from `u0` at the cell centres.
    pub fn from_fn(dim: usize, side: usize, u0: impl Fn(&[f64]) -> f64) -> Self {
        Self {
            dim,
            side,
            values: sample_grid(dim, side, 0.5, u0),
        }
    }
}

fn check_len(dim: usize, side: usize, values: &[f64]) -> Result<()> {
    let n = side.pow(dim as u32);
    if values.len() != n {
        return domain(format!("expected {n} values, got {}", values.len()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return domain(format!("value at index {i} is not finite"));
    }
    Ok(())
}

/// Coordinates of node `i` of an `M^d` grid with nodes at `(k + offset)/M`.
pub fn node_position(dim: usize, side: usize, offset: f64, i: usize, out: &mut [f64]) {
    let mut r = i;
    for a in (0..dim).rev() {
        out[a] = ((r % side) as f64 + offset) / side as f64;
        r /= side;
    }
}

fn sample_grid(dim: usize, side: usize, offset: f64, u0: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let n = side.pow(dim as u32);
    let mut v = vec![0.0; dim];
    (0..n)
        .map(|i| {
            node_position(dim, side, offset, i, &mut v);
            u0(&v)
        })
        .collect()
}

/// `Delta^N u(x) = N^2 sum_i (u(x + e_i) + u(x - e_i) - 2 u(x))`.
pub fn discrete_laplacian(u: &LatticeField, x: usize) -> f64 {
    let g = u.geometry();
    let n2 = (u.side * u.side) as f64;
    let nb = g.neighbors(x);
    n2 * nb.iter().map(|&y| u.values[y] - u.values[x]).sum::<f64>()
}

/// Unscaled periodic Laplacian `sum_i (u(x+e_i) + u(x-e_i) - 2u(x))` of the
/// whole field, written into `out`.
pub fn laplacian_stencil(dim: usize, side: usize, u: &[f64], out: &mut [f64]) {
    let n = side;
    match dim {
        1 => {
            out[0] = u[n - 1] + u[1] - 2.0 * u[0];
            for i in 1..n - 1 {
                out[i] = u[i - 1] + u[i + 1] - 2.0 * u[i];
            }
            out[n - 1] = u[n - 2] + u[0] - 2.0 * u[n - 1];
        }
        _ => {
            out.iter_mut().for_each(|o| *o = 0.0);
            let total = u.len();
            let mut stride = total;
            for _ in 0..dim {
                stride /= n;
                for i in 0..total {
                    let c = (i / stride) % n;
                    let up = if c + 1 == n {
                        i + stride - n * stride
                    } else {
                        i + stride
                    };
                    let down = if c == 0 {
                        i + n * stride - stride
                    } else {
                        i - stride
                    };
                    out[i] += u[up] + u[down] - 2.0 * u[i];
                }
            }
        }
    }
}

/// Frames of a solution at the requested output times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dim: usize,
    pub side: usize,
    /// Node offset within a cell: 0 for lattice sites, 1/2 for cell centres.
    pub node_offset: f64,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
    pub dt: f64,
    pub steps: u64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl Trajectory {
    pub fn position(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        node_position(self.dim, self.side, self.node_offset, i, &mut v);
        v
    }

    /// Frame at the output time closest to `t`.
    pub fn frame_at(&self, t: f64) -> Option<&[f64]> {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())?
            .0;
        Some(&self.frames[i])
    }

    pub fn last(&self) -> &[f64] {
        self.frames.last().expect("trajectory has frames")
    }

    /// Long-format CSV `t,index,value`, split into files of at most
    /// `frames_per_file` frames named `<stem>_<k>.csv`.
    pub fn write_csv_chunks(
        &self,
        dir: &Path,
        stem: &str,
        frames_per_file: usize,
    ) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (k, chunk) in self.times.chunks(frames_per_file.max(1)).enumerate() {
            let mut s = String::from("t,index,value\n");
            for (j, t) in chunk.iter().enumerate() {
                let frame = &self.frames[k * frames_per_file.max(1) + j];
                for (i, v) in frame.iter().enumerate() {
                    let _ = writeln!(s, "{t:.9e},{i},{v:.17e}");
                }
            }
            let path = dir.join(format!("{stem}_{k:04}.csv"));
            std::fs::write(&path, s)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// `du/dt = diffusion * side^2 * stencil(u) + reaction * f(u)`.
#[derive(Debug, Clone)]
pub struct RdProblem {
    pub dim: usize,
    pub side: usize,
    pub diffusion: f64,
    pub reaction: f64,
    pub node_offset: f64,
    pub f: ReactionPolynomial,
}

impl RdProblem {
    /// Lattice problem on `T_N^d` with parameter `K`.
    pub fn lattice(geometry: TorusGeometry, k: f64, f: ReactionPolynomial) -> Result<Self> {
        if !(k > 1.0 && k.is_finite()) {
            return domain(format!("K must exceed 1, got {k}"));
        }
        Ok(Self {
            dim: geometry.dim(),
            side: geometry.side(),
            diffusion: 1.0 / k.sqrt(),
            reaction: k.sqrt(),
            node_offset: 0.0,
            f,
        })
    }

    /// Continuum problem with parameter `eps` on an `M^d` grid; requires
    /// `M >= 20 / eps` so the layer of width `O(eps)` is resolved.
    pub fn continuum(dim: usize, m: usize, eps: f64, f: ReactionPolynomial) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return domain(format!("eps must lie in (0, 1), got {eps}"));
        }
        let required = (20.0 / eps - 1e-9).ceil() as usize;
        if m < required {
            return Err(Error::UnderResolved { required, got: m });
        }
        Ok(Self {
            dim,
            side: m,
            diffusion: eps,
            reaction: 1.0 / eps,
            node_offset: 0.5,
            f,
        })
    }

    /// Largest admissible step on `[lo, hi]`:
    /// `min(h^2 / (8 d D), 0.1 / (R max|f'|))`.
    pub fn max_dt(&self, lo: f64, hi: f64) -> f64 {
        let h = 1.0 / self.side as f64;
        let diff = h * h / (8.0 * self.dim as f64 * self.diffusion);
        let lip = self.f.lipschitz_on(lo, hi);
        let react = if lip > 0.0 {
            0.1 / (self.reaction * lip)
        } else {
            f64::INFINITY
        };
        diff.min(react)
    }

    fn rhs(&self, u: &[f64], lap: &mut [f64], out: &mut [f64]) {
        laplacian_stencil(self.dim, self.side, u, lap);
        let d = self.diffusion * (self.side * self.side) as f64;
        let r = self.reaction;
        let c = &self.f.coefficients;
        for i in 0..u.len() {
            let x = u[i];
            let fx = c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
            out[i] = d * lap[i] + r * fx;
        }
    }

    /// Integrates from `u0` at time 0 and records the frames at the sorted
    /// `times` (which must lie in `[0, t_end]`); the last output is `t_end`.
    pub fn solve(&self, u0: &[f64], t_end: f64, times: &[f64]) -> Result<Trajectory> {
        let lo = u0
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
            .min(self.f.alpha_minus);
        let hi = u0
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(self.f.alpha_plus);
        self.solve_with_bounds(u0, t_end, times, lo, hi)
    }

    pub fn solve_with_bounds(
        &self,
        u0: &[f64],
        t_end: f64,
        times: &[f64],
        lo: f64,
        hi: f64,
    ) -> Result<Trajectory> {
        check_len(self.dim, self.side, u0)?;
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| t < 0.0 || t > t_end) {
            return domain("output times must be sorted and lie in [0, t_end]");
        }
        let dt_max = self.max_dt(lo, hi);
        let n = u0.len();
        let mut u = u0.to_vec();
        let mut out = Trajectory {
            dim: self.dim,
            side: self.side,
            node_offset: self.node_offset,
            times: Vec::new(),
            frames: Vec::new(),
            dt: dt_max,
            steps: 0,
            lower_bound: lo,
            upper_bound: hi,
        };
        let mut targets: Vec<f64> = times.to_vec();
        if targets.last().is_none_or(|&t| t < t_end) {
            targets.push(t_end);
        }
        let mut buf = Rk4Buffers::new(n);
        let mut t = 0.0;
        for &target in &targets {
            let gap = target - t;
            if gap > 0.0 {
                let steps = (gap / dt_max).ceil().max(1.0) as u64;
                let dt = gap / steps as f64;
                for s in 0..steps {
                    self.rk4(&mut u, dt, &mut buf);
                    let now = t + (s + 1) as f64 * dt;
                    if let Some((i, &v)) = u
                        .iter()
                        .enumerate()
                        .find(|(_, &v)| !(v >= lo - BOUND_SLACK && v <= hi + BOUND_SLACK))
                    {
                        return Err(Error::Instability {
                            time: now,
                            index: i,
                            value: v,
                            lo,
                            hi,
                        });
                    }
                }
                out.steps += steps;
                t = target;
            }
            out.times.push(target);
            out.frames.push(u.clone());
        }
        Ok(out)
    }

    fn rk4(&self, u: &mut [f64], dt: f64, b: &mut Rk4Buffers) {
        let n = u.len();
        self.rhs(u, &mut b.lap, &mut b.k1);
        for i in 0..n {
            b.tmp[i] = u[i] + 0.5 * dt * b.k1[i];
        }
        self.rhs(&b.tmp, &mut b.lap, &mut b.k2);
        for i in 0..n {
            b.tmp[i] = u[i] + 0.5 * dt * b.k2[i];
        }
        self.rhs(&b.tmp, &mut b.lap, &mut b.k3);
        for i in 0..n {
            b.tmp[i] = u[i] + dt * b.k3[i];
        }
        self.rhs(&b.tmp, &mut b.lap, &mut b.k4);
        for i in 0..n {
            u[i] += dt / 6.0 * (b.k1[i] + 2.0 * (b.k2[i] + b.k3[i]) + b.k4[i]);
        }
    }
}

struct Rk4Buffers {
    lap: Vec<f64>,
    tmp: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
}

impl Rk4Buffers {
    fn new(n: usize) -> Self {
        Self {
            lap: vec![0.0; n],
            tmp: vec![0.0; n],
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
        }
    }
}

/// Lattice problem `du/dt = (1/sqrt K) Delta^N u + sqrt K f(u)`.
pub fn solve_pnk(
    u0: &LatticeField,
    f: &ReactionPolynomial,
    k: f64,
    t_end: f64,
    times: &[f64],
) -> Result<Trajectory> {
    if let Some(v) = u0.values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return domain(format!("initial value {v} is not in (0, 1)"));
    }
    RdProblem::lattice(u0.geometry(), k, f.clone())?.solve(&u0.values, t_end, times)
}

/// Continuum problem `du/dt = eps Delta u + f(u) / eps`.
pub fn solve_pe(
    u0: &ContinuumField,
    f: &ReactionPolynomial,
    eps: f64,
    t_end: f64,
    times: &[f64],
) -> Result<Trajectory> {
    RdProblem::continuum(u0.dim, u0.side, eps, f.clone())?.solve(&u0.values, t_end, times)
}

/// Piecewise-constant extension `hat u^N` of a lattice field: constant on
/// the half-open boxes `prod [x_i/N - 1/(2N), x_i/N + 1/(2N))`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub dim: usize,
    pub side: usize,
    pub values: Vec<f64>,
}

pub fn embed_step(u: &LatticeField) -> StepFunction {
    StepFunction {
        dim: u.dim,
        side: u.side,
        values: u.values.clone(),
    }
}

impl StepFunction {
    /// Index of the box containing `v` (coordinates taken modulo 1).
    pub fn box_of(&self, v: &[f64]) -> usize {
        let n = self.side as f64;
        v.iter().fold(0usize, |acc, &c| {
            let k = (c.rem_euclid(1.0) * n + 0.5).floor() as usize % self.side;
            acc * self.side + k
        })
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.values[self.box_of(v)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time: f64,
    pub index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ordered: bool,
    pub tolerance: f64,
    pub violations: usize,
    pub first: Option<Violation>,
    /// Largest `lower - upper` seen (negative when strictly ordered).
    pub max_excess: f64,
}

/// Checks `lower <= upper + tol` frame by frame.
pub fn check_comparison(
    times: &[f64],
    lower: &[Vec<f64>],
    upper: &[Vec<f64>],
    tol: f64,
) -> Result<ComparisonReport> {
    if lower.len() != upper.len() || lower.len() != times.len() {
        return domain("trajectories have different numbers of frames");
    }
    let mut report = ComparisonReport {
        ordered: true,
        tolerance: tol,
        violations: 0,
        first: None,
        max_excess: f64::NEG_INFINITY,
    };
    for ((&t, lo), up) in times.iter().zip(lower).zip(upper) {
        if lo.len() != up.len() {
            return domain("frames have different sizes");
        }
        for (i, (&a, &b)) in lo.iter().zip(up).enumerate() {
            let excess = a - b;
            report.max_excess = report.max_excess.max(excess);
            if excess > tol {
                report.ordered = false;
                report.violations += 1;
                if report.first.is_none() {
                    report.first = Some(Violation {
                        time: t,
                        index: i,
                        magnitude: excess,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Generation-time scale of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GenerationScale {
    /// Continuum problem: `t^eps = eps |log eps| / gamma`, width `M0 eps`.
    Continuum { eps: f64 },
    /// Lattice problem: `t^N = log K / (2 gamma sqrt K)`, width `M0 / sqrt K`.
    Lattice { k: f64 },
}

impl GenerationScale {
    pub fn time(&self, gamma: f64) -> f64 {
        match *self {
            Self::Continuum { eps } => eps * eps.ln().abs() / gamma,
            Self::Lattice { k } => k.ln() / (2.0 * gamma * k.sqrt()),
        }
    }

    pub fn width(&self) -> f64 {
        match *self {
            Self::Continuum { eps } => eps,
            Self::Lattice { k } => 1.0 / k.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub time: f64,
    pub delta: f64,
    /// Values within `[alpha_- - delta, alpha_+ + delta]`.
    pub bounds_hold: bool,
    pub min_value: f64,
    pub max_value: f64,
    /// Smallest `M0` for which the two one-sided clauses hold: every site
    /// that misses its target has `|u0 - alpha_*|` at most `M0 * width`.
    pub smallest_m0: f64,
    /// The requested `M0`, if any, and whether all clauses hold with it.
    pub requested_m0: Option<f64>,
    pub passed: Option<bool>,
}

/// Evaluates the three generation clauses on `u_gen`, the solution at the
/// generation time, for initial data `u0`.
pub fn generation_check(
    u0: &[f64],
    u_gen: &[f64],
    f: &ReactionPolynomial,
    constants: &DerivedConstants,
    scale: GenerationScale,
    delta: f64,
    m0: Option<f64>,
) -> Result<GenerationReport> {
    if !(delta > 0.0 && delta < constants.delta0) {
        return domain(format!(
            "delta = {delta} must lie in (0, delta0 = {})",
            constants.delta0
        ));
    }
    if u0.len() != u_gen.len() {
        return domain("initial and generated fields have different sizes");
    }
    let (am, a_star, ap) = (f.alpha_minus, f.alpha_star, f.alpha_plus);
    let min_value = u_gen.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = u_gen.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounds_hold = min_value >= am - delta && max_value <= ap + delta;
    let w = scale.width();
    let mut smallest = 0.0f64;
    for (&a, &b) in u0.iter().zip(u_gen) {
        let missed = (a > a_star && b < ap - delta) || (a < a_star && b > am + delta);
        if missed {
            smallest = smallest.max((a - a_star).abs() / w);
        }
    }
    let passed = m0.map(|m| bounds_hold && m > smallest);
    Ok(GenerationReport {
        time: scale.time(constants.gamma),
        delta,
        bounds_hold,
        min_value,
        max_value,
        smallest_m0: smallest,
        requested_m0: m0,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    /// `max N |u(y) - u(x)|` over neighbours and frames.
    pub max_gradient: f64,
    /// `max |Delta^N u|` over sites and frames.
    pub max_laplacian: f64,
    /// `max_gradient / K`.
    pub gradient_constant: f64,
    /// `max_laplacian / K^2`.
    pub laplacian_constant: f64,
}

/// Empirical constants in `N |u(y) - u(x)| <= C K` and `|Delta^N u| <= C K^2`.
pub fn gradient_bounds(traj: &Trajectory, k: f64) -> GradientReport {
    let n = traj.side;
    let mut lap = vec![0.0; traj.frames.first().map_or(0, |f| f.len())];
    let mut grad = 0.0f64;
    let mut lmax = 0.0f64;
    let total = lap.len();
    for frame in &traj.frames {
        laplacian_stencil(traj.dim, n, frame, &mut lap);
        lmax = lap
            .iter()
            .fold(lmax, |m, v| m.max(v.abs() * (n * n) as f64));
        let mut stride = total;
        for _ in 0..traj.dim {
            stride /= n;
            for i in 0..total {
                let c = (i / stride) % n;
                let up = if c + 1 == n {
                    i + stride - n * stride
                } else {
                    i + stride
                };
                grad = grad.max(n as f64 * (frame[up] - frame[i]).abs());
            }
        }
    }
    GradientReport {
        max_gradient: grad,
        max_laplacian: lmax,
        gradient_constant: grad / k,
        laplacian_constant: lmax / (k * k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_examples() {
        let g = TorusGeometry::new(1, 4).unwrap();
        let u = LatticeField::new(g, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(discrete_laplacian(&u, 1), -32.0);
        assert_eq!(discrete_laplacian(&u, 0), 16.0);
        // linear in the index: zero inside, non-zero across the wrap
        let lin = LatticeField::new(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(discrete_laplacian(&lin, 1), 0.0);
        assert_eq!(discrete_laplacian(&lin, 2), 0.0);
        assert_eq!(discrete_laplacian(&lin, 0), 16.0 * (3.0 + 1.0));
        assert_eq!(discrete_laplacian(&lin, 3), 16.0 * (2.0 + 0.0 - 6.0));
    }

    #[test]
    fn stencil_matches_pointwise_laplacian() {
        let g = TorusGeometry::new(2, 5).unwrap();
        let u = LatticeField::from_fn(g, |v| (6.0 * v[0]).sin() + v[1] * v[1]);
        let mut out = vec![0.0; 25];
        laplacian_stencil(2, 5, &u.values, &mut out);
        for x in 0..25 {
            assert!((25.0 * out[x] - discrete_laplacian(&u, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn step_function_boxes() {
        let g = TorusGeometry::new(1, 4).unwrap();
        let s = embed_step(&LatticeField::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        assert_eq!(s.eval(&[0.25]), 2.0);
        // box of site 1 is [0.125, 0.375)
        assert_eq!(s.eval(&[0.125]), 2.0);
        assert_eq!(s.eval(&[0.375]), 3.0);
        assert_eq!(s.eval(&[0.9]), 1.0);
    }

    #[test]
    fn under_resolved_continuum_is_refused() {
        let f = ReactionPolynomial::default_model(1.0).unwrap();
        match RdProblem::continuum(1, 100, 0.1, f) {
            Err(Error::UnderResolved { required, got }) => assert_eq!((required, got), (200, 100)),
            other => panic!("{other:?}"),
        }
    }
}
