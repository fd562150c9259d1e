//! Interface geometry and the sub/super solutions built on it.
//!
//! Sign convention: the signed distance `dbar` is negative inside `G^+`
//! (where the limit density is `alpha_+`) and positive on the closure of
//! `G^-`. Fronts on the circle are unions of open arcs with exact
//! distances; fronts on the 2-torus are signed-distance grids measured to the
//! piecewise-linear zero set of a level-set function.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rates::ReactionPolynomial;
use crate::rd::{laplacian_stencil, node_position};
use crate::stats::{linear_fit, t_quantile};
use crate::wave::WaveProfile;

/// Nodes of a periodic grid: `side^dim` points at `(k + offset) / side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub side: usize,
    pub offset: f64,
}

impl Grid {
    /// Lattice sites `x / N`.
    pub fn lattice(dim: usize, side: usize) -> Self {
        Self {
            dim,
            side,
            offset: 0.0,
        }
    }

    /// Cell centres `(i + 1/2) / M`.
    pub fn cells(dim: usize, side: usize) -> Self {
        Self {
            dim,
            side,
            offset: 0.5,
        }
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.side as f64
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        node_position(self.dim, self.side, self.offset, i, &mut v);
        v
    }
}

/// Distance on the unit circle.
fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Signed representation of the interface `Gamma` and region `G^+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FrontState {
    /// `G^+` as disjoint open arcs `(a, b)` with `a` in `[0, 1)` and
    /// `a < b`; a single arc of length 1 means `G^+` is the whole circle.
    Line { intervals: Vec<(f64, f64)> },
    /// Signed distance at the nodes of a square periodic grid.
    Plane { grid: Grid, dist: Vec<f64> },
}

impl FrontState {
    /// Front on the circle from arcs, which are normalised and merged.
    pub fn from_intervals(intervals: &[(f64, f64)]) -> Result<Self> {
        let arcs: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
        if arcs.is_empty() {
            return domain("G+ is empty");
        }
        let merged = merge_arcs(arcs);
        if merged.len() == 1 && merged[0].1 - merged[0].0 >= 1.0 {
            return domain("G+ covers the whole circle, so its complement is empty");
        }
        Ok(Self::Line { intervals: merged })
    }

    /// Front on the circle from an indicator on `M` cells `[i/M, (i+1)/M)`.
    pub fn from_indicator_1d(mask: &[bool]) -> Result<Self> {
        let m = mask.len() as f64;
        let arcs: Vec<(f64, f64)> = mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i as f64 / m, (i + 1) as f64 / m))
            .collect();
        if arcs.is_empty() || arcs.len() == mask.len() {
            return domain("indicator must have a nonempty region and complement");
        }
        Self::from_intervals(&arcs)
    }

    /// Front on the 2-torus from a level-set function sampled on `grid`
    /// (negative inside `G^+`), re-initialised to a signed distance.
    pub fn plane_from_level_set(grid: Grid, phi: &[f64]) -> Result<Self> {
        if grid.dim != 2 {
            return domain("plane fronts need a two-dimensional grid");
        }
        if phi.len() != grid.len() {
            return domain("level-set samples do not match the grid");
        }
        if phi.iter().all(|&v| v < 0.0) || phi.iter().all(|&v| v >= 0.0) {
            return domain("level set must have a nonempty region and complement");
        }
        Ok(Self::Plane {
            grid,
            dist: redistance(grid, phi),
        })
    }

    /// Front on the 2-torus from an indicator of `G^+` at the grid nodes.
    pub fn plane_from_indicator(grid: Grid, mask: &[bool]) -> Result<Self> {
        let phi: Vec<f64> = mask.iter().map(|&b| if b { -1.0 } else { 1.0 }).collect();
        Self::plane_from_level_set(grid, &phi)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Line { .. } => 1,
            Self::Plane { .. } => 2,
        }
    }

    /// Whether `G^+` fills the whole torus (after Huygens merging).
    pub fn is_full(&self) -> bool {
        match self {
            Self::Line { intervals } => {
                intervals.len() == 1 && intervals[0].1 - intervals[0].0 >= 1.0
            }
            Self::Plane { dist, .. } => dist.iter().all(|&d| d < 0.0),
        }
    }

    /// Whether `G^+` is empty (after shrinking with a negative speed).
    pub fn is_empty(&self) -> bool {
        match self {
            Self::Line { intervals } => intervals.is_empty(),
            Self::Plane { dist, .. } => dist.iter().all(|&d| d >= 0.0),
        }
    }

    /// Endpoints of the arcs with orientation: `Up` where `G^+` starts
    /// (moving in the positive direction), `Down` where it ends.
    pub fn crossings(&self) -> Vec<(f64, Orientation)> {
        match self {
            Self::Line { intervals } if !self.is_full() => {
                let mut v: Vec<(f64, Orientation)> = intervals
                    .iter()
                    .flat_map(|&(a, b)| {
                        [
                            (a.rem_euclid(1.0), Orientation::Up),
                            (b.rem_euclid(1.0), Orientation::Down),
                        ]
                    })
                    .collect();
                v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                v
            }
            _ => Vec::new(),
        }
    }

    /// `(dbar, d dbar / dv)` on the circle; the slope is `+-1` away from
    /// the cut locus.
    pub fn distance_and_slope_1d(&self, v: f64) -> (f64, f64) {
        let Self::Line { intervals } = self else {
            panic!("distance_and_slope_1d needs a front on the circle");
        };
        if intervals.is_empty() {
            return (f64::INFINITY, 0.0);
        }
        if self.is_full() {
            return (f64::NEG_INFINITY, 0.0);
        }
        let v = v.rem_euclid(1.0);
        let inside = intervals.iter().any(|&(a, b)| {
            let r = (v - a).rem_euclid(1.0);
            r > 0.0 && r < b - a
        });
        let mut best = f64::INFINITY;
        let mut slope = 0.0;
        for &(a, b) in intervals {
            for e in [a, b] {
                let dist = circ(v, e);
                if dist < best {
                    best = dist;
                    // derivative of |v - e| on the circle
                    let diff = (v - e).rem_euclid(1.0);
                    slope = if diff <= 0.5 { 1.0 } else { -1.0 };
                }
            }
        }
        if inside {
            (-best, -slope)
        } else {
            (best, slope)
        }
    }

    /// Signed distance at an arbitrary point (bilinear on plane grids).
    pub fn signed_distance_at(&self, v: &[f64]) -> f64 {
        match self {
            Self::Line { .. } => self.distance_and_slope_1d(v[0]).0,
            Self::Plane { grid, dist } => bilinear(*grid, dist, v),
        }
    }

    /// Signed distance at every node of `grid`.
    pub fn sample(&self, grid: Grid) -> Result<Vec<f64>> {
        if grid.dim != self.dim() {
            return domain("grid and front have different dimensions");
        }
        Ok((0..grid.len())
            .map(|i| self.signed_distance_at(&grid.position(i)))
            .collect())
    }
}

fn merge_arcs(arcs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = arcs
        .into_iter()
        .map(|(a, b)| {
            let s = a.rem_euclid(1.0);
            (s, s + (b - a))
        })
        .collect();
    if v.iter().any(|(a, b)| b - a >= 1.0) {
        return vec![(0.0, 1.0)];
    }
    v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    // arcs running past 1 may overlap the first arcs
    while out.len() > 1 {
        let first = out[0];
        let last = *out.last().unwrap();
        if last.1 >= first.0 + 1.0 {
            out.remove(0);
            let l = out.last_mut().unwrap();
            l.1 = l.1.max(first.1 + 1.0);
        } else {
            break;
        }
    }
    if out.iter().any(|(a, b)| b - a >= 1.0) {
        return vec![(0.0, 1.0)];
    }
    out
}

/// Orientation of a crossing of the level `alpha_*` in the positive
/// direction: `Up` when the profile increases through it, `Down` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Up,
    Down,
}

/// Signed distance from an indicator: exact on the circle (cells
/// `[i/M, (i+1)/M)`), exact redistancing on the 2-torus (nodes of `grid`).
pub fn signed_distance(grid: Grid, mask: &[bool]) -> Result<FrontState> {
    match grid.dim {
        1 => FrontState::from_indicator_1d(mask),
        2 => FrontState::plane_from_indicator(grid, mask),
        d => domain(format!("dimension {d} is not supported")),
    }
}

fn neighbours2(grid: Grid, i: usize) -> [[usize; 2]; 2] {
    let n = grid.side;
    let (r, c) = (i / n, i % n);
    [
        [((r + 1) % n) * n + c, ((r + n - 1) % n) * n + c],
        [r * n + (c + 1) % n, r * n + (c + n - 1) % n],
    ]
}

/// Zero set of the bilinear interpolant of `phi`, as segments per grid
/// cell in cell-local coordinates (units of the spacing).
fn zero_segments(grid: Grid, phi: &[f64]) -> Vec<Vec<[(f64, f64); 2]>> {
    let n = grid.side;
    let at = |r: usize, c: usize| phi[(r % n) * n + (c % n)];
    let mut cells = vec![Vec::new(); n * n];
    for r in 0..n {
        for c in 0..n {
            // corners counter-clockwise from (0, 0)
            let corner = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            let val = [at(r, c), at(r + 1, c), at(r + 1, c + 1), at(r, c + 1)];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (val[e], val[(e + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    let t = a / (a - b);
                    let (p, q) = (corner[e], corner[(e + 1) % 4]);
                    pts.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
                }
            }
            let cell = &mut cells[r * n + c];
            match pts.len() {
                2 => cell.push([pts[0], pts[1]]),
                4 => {
                    // saddle: pair by the sign of the centre value
                    let centre = 0.25 * val.iter().sum::<f64>();
                    if (centre < 0.0) == (val[0] < 0.0) {
                        cell.push([pts[0], pts[3]]);
                        cell.push([pts[1], pts[2]]);
                    } else {
                        cell.push([pts[0], pts[1]]);
                        cell.push([pts[2], pts[3]]);
                    }
                }
                _ => {}
            }
        }
    }
    cells
}

fn point_segment(p: (f64, f64), s: [(f64, f64); 2]) -> f64 {
    let (dx, dy) = (s[1].0 - s[0].0, s[1].1 - s[0].1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - s[0].0) * dx + (p.1 - s[0].1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (s[0].0 + t * dx - p.0, s[0].1 + t * dy - p.1);
    (ex * ex + ey * ey).sqrt()
}

/// Rings of cells searched around a node before falling back to a scan of
/// every segment.
const NEAR_RINGS: i64 = 4;

/// Signed distance from every node to the piecewise-linear zero set of
/// `phi`. Nodes near the zero set search rings of cells outward until no
/// closer segment can exist; the others scan all segments under the
/// minimum-image convention.
fn redistance(grid: Grid, phi: &[f64]) -> Vec<f64> {
    let n = grid.side as i64;
    let nf = n as f64;
    let segments = zero_segments(grid, phi);
    let all: Vec<[(f64, f64); 2]> = segments
        .iter()
        .enumerate()
        .flat_map(|(cell, segs)| {
            let (r, c) = ((cell as i64 / n) as f64, (cell as i64 % n) as f64);
            segs.iter()
                .map(move |s| [(s[0].0 + r, s[0].1 + c), (s[1].0 + r, s[1].1 + c)])
        })
        .collect();
    let wrap = |d: f64| d - nf * (d / nf).round();
    let h = grid.spacing();
    (0..phi.len())
        .map(|i| {
            let (r, c) = ((i as i64) / n, (i as i64) % n);
            let mut best = f64::INFINITY;
            let mut ring = 0i64;
            while ring <= NEAR_RINGS.min(n / 2 + 1) && best > ring as f64 {
                for di in -ring - 1..=ring {
                    for dj in -ring - 1..=ring {
                        let on_ring =
                            di == ring || di == -ring - 1 || dj == ring || dj == -ring - 1;
                        if !on_ring {
                            continue;
                        }
                        let cell = ((r + di).rem_euclid(n) * n + (c + dj).rem_euclid(n)) as usize;
                        for s in &segments[cell] {
                            let shifted = [
                                (s[0].0 + di as f64, s[0].1 + dj as f64),
                                (s[1].0 + di as f64, s[1].1 + dj as f64),
                            ];
                            best = best.min(point_segment((0.0, 0.0), shifted));
                        }
                    }
                }
                ring += 1;
            }
            if best > ring as f64 {
                let (rf, cf) = (r as f64, c as f64);
                for s in &all {
                    let a = (wrap(s[0].0 - rf), wrap(s[0].1 - cf));
                    let b = (a.0 + s[1].0 - s[0].0, a.1 + s[1].1 - s[0].1);
                    best = best.min(point_segment((0.0, 0.0), [a, b]));
                }
            }
            let d = best * h;
            if phi[i] < 0.0 {
                -d
            } else {
                d
            }
        })
        .collect()
}

fn bilinear(grid: Grid, values: &[f64], v: &[f64]) -> f64 {
    let n = grid.side;
    let s = |x: f64| (x.rem_euclid(1.0) * n as f64 - grid.offset).rem_euclid(n as f64);
    let (sx, sy) = (s(v[0]), s(v[1]));
    let (i0, j0) = (sx.floor() as usize % n, sy.floor() as usize % n);
    let (i1, j1) = ((i0 + 1) % n, (j0 + 1) % n);
    let (fx, fy) = (sx - sx.floor(), sy - sy.floor());
    let at = |i: usize, j: usize| values[i * n + j];
    (1.0 - fx) * ((1.0 - fy) * at(i0, j0) + fy * at(i0, j1))
        + fx * ((1.0 - fy) * at(i1, j0) + fy * at(i1, j1))
}

/// `G_t^+ = {v : dist(v, G_0^+) < c t}`; negative `c t` shrinks `G^+`.
pub fn huygens_evolve(front: &FrontState, c: f64, t: f64) -> FrontState {
    let r = c * t;
    match front {
        FrontState::Line { intervals } => {
            if front.is_full() {
                return front.clone();
            }
            let arcs: Vec<(f64, f64)> = intervals
                .iter()
                .map(|&(a, b)| (a - r, b + r))
                .filter(|(a, b)| b > a)
                .collect();
            FrontState::Line {
                intervals: if arcs.is_empty() {
                    Vec::new()
                } else {
                    merge_arcs(arcs)
                },
            }
        }
        FrontState::Plane { grid, dist } => {
            let phi: Vec<f64> = dist.iter().map(|d| d - r).collect();
            let degenerate = phi.iter().all(|&v| v < 0.0) || phi.iter().all(|&v| v >= 0.0);
            FrontState::Plane {
                grid: *grid,
                dist: if degenerate {
                    phi
                } else {
                    redistance(*grid, &phi)
                },
            }
        }
    }
}

fn components(grid: Grid, mask: &[bool]) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    for s in 0..mask.len() {
        if !mask[s] || seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            for j in neighbours2(grid, i).into_iter().flatten() {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

/// First time in `(0, t_max]` at which `G_t^+` or its complement changes
/// its number of connected components (exact on the circle, scanned with
/// `steps` samples on the plane).
pub fn first_topology_change(front: &FrontState, c: f64, t_max: f64, steps: usize) -> Option<f64> {
    match front {
        FrontState::Line { intervals } => {
            if c == 0.0 || intervals.is_empty() || front.is_full() {
                return None;
            }
            let t = if c > 0.0 {
                let k = intervals.len();
                (0..k)
                    .map(|i| {
                        let next = if i + 1 < k {
                            intervals[i + 1].0
                        } else {
                            intervals[0].0 + 1.0
                        };
                        (next - intervals[i].1) / (2.0 * c)
                    })
                    .fold(f64::INFINITY, f64::min)
            } else {
                intervals
                    .iter()
                    .map(|(a, b)| (b - a) / (2.0 * -c))
                    .fold(f64::INFINITY, f64::min)
            };
            (t <= t_max).then_some(t)
        }
        FrontState::Plane { grid, dist } => {
            let count = |d: &[f64]| {
                let inside: Vec<bool> = d.iter().map(|&v| v < 0.0).collect();
                let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
                (components(*grid, &inside), components(*grid, &outside))
            };
            let base = count(dist);
            (1..=steps)
                .map(|k| t_max * k as f64 / steps as f64)
                .find(|&t| {
                    let r = c * t;
                    let shifted: Vec<f64> = dist.iter().map(|d| d - r).collect();
                    count(&shifted) != base
                })
        }
    }
}

/// `alpha_+` on `G^+`, `alpha_-` elsewhere, at the nodes of `grid`.
pub fn chi_field(
    front: &FrontState,
    alpha_minus: f64,
    alpha_plus: f64,
    grid: Grid,
) -> Result<Vec<f64>> {
    Ok(front
        .sample(grid)?
        .into_iter()
        .map(|d| if d < 0.0 { alpha_plus } else { alpha_minus })
        .collect())
}

/// The cutoff `h`: identity on `|s| <= d0`, constant `+-2 d0` for
/// `|s| >= 3 d0`, and on `d0 < |s| < 3 d0` the unique quintic matching
/// value, slope and curvature at both ends, `d0 + 2 d0 (x - x^3 + x^4/2)`
/// with `x = (|s| - d0) / (2 d0)` (its `x^5` coefficient vanishes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub d0: f64,
}

impl Cutoff {
    pub fn new(d0: f64) -> Result<Self> {
        if !(d0 > 0.0) {
            return domain(format!("d0 must be positive, got {d0}"));
        }
        Ok(Self { d0 })
    }

    /// `(h, h', h'')` at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let d0 = self.d0;
        let a = s.abs();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        if a <= d0 {
            (s, 1.0, 0.0)
        } else if a >= 3.0 * d0 {
            (sign * 2.0 * d0, 0.0, 0.0)
        } else {
            let x = (a - d0) / (2.0 * d0);
            let g = x - x * x * x + 0.5 * x * x * x * x;
            let dg = 1.0 - 3.0 * x * x + 2.0 * x * x * x;
            let d2g = (-6.0 * x + 6.0 * x * x) / (2.0 * d0);
            (sign * (d0 + 2.0 * d0 * g), dg, sign * d2g)
        }
    }

    /// `max |h''| = 3 / (4 d0)`, reached at `|s| = 2 d0`.
    pub fn max_second_derivative(&self) -> f64 {
        0.75 / self.d0
    }
}

/// Cutoff distance `d = h(dbar)` of a front.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffDistance {
    pub front: FrontState,
    pub cutoff: Cutoff,
}

/// Largest half width `3 d0` for which the band `|dbar| < 3 d0` avoids the
/// cut locus: on the circle every arc and gap must be longer than `6 d0`.
pub fn max_band_d0(front: &FrontState) -> Option<f64> {
    match front {
        FrontState::Line { intervals } => {
            if intervals.is_empty() || front.is_full() {
                return None;
            }
            let k = intervals.len();
            let shortest = (0..k)
                .flat_map(|i| {
                    let (a, b) = intervals[i];
                    let next = if i + 1 < k {
                        intervals[i + 1].0
                    } else {
                        intervals[0].0 + 1.0
                    };
                    [b - a, next - b]
                })
                .fold(f64::INFINITY, f64::min);
            Some(shortest / 6.0)
        }
        FrontState::Plane { grid, dist } => {
            // shrink d0 until the eikonal check passes on the band
            let mut d0 = 0.25;
            while d0 > 2.0 * grid.spacing() {
                if eikonal_defect(*grid, dist, 3.0 * d0) < EIKONAL_TOLERANCE {
                    return Some(d0);
                }
                d0 *= 0.8;
            }
            None
        }
    }
}

/// Tolerance on `| |grad dbar| - 1 |` in the band of plane fronts.
pub const EIKONAL_TOLERANCE: f64 = 0.15;

/// Largest `| |grad dbar| - 1 |` by central differences over nodes with
/// `|dbar| < band` (plane grids).
pub fn eikonal_defect(grid: Grid, dist: &[f64], band: f64) -> f64 {
    let h = grid.spacing();
    (0..dist.len())
        .filter(|&i| dist[i].abs() < band)
        .map(|i| {
            let nb = neighbours2(grid, i);
            let gx = (dist[nb[0][0]] - dist[nb[0][1]]) / (2.0 * h);
            let gy = (dist[nb[1][0]] - dist[nb[1][1]]) / (2.0 * h);
            ((gx * gx + gy * gy).sqrt() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Applies `h` after checking that the `3 d0` band avoids the cut locus.
pub fn cutoff_distance(front: &FrontState, d0: f64) -> Result<CutoffDistance> {
    let cutoff = Cutoff::new(d0)?;
    let ok = match front {
        FrontState::Line { .. } => max_band_d0(front).is_some_and(|m| d0 < m),
        FrontState::Plane { grid, dist } => {
            eikonal_defect(*grid, dist, 3.0 * d0) < EIKONAL_TOLERANCE
        }
    };
    if !ok {
        return domain(format!(
            "band |dbar| < 3 d0 = {} reaches the cut locus; choose a smaller d0 (at most {:?})",
            3.0 * d0,
            max_band_d0(front)
        ));
    }
    Ok(CutoffDistance {
        front: front.clone(),
        cutoff,
    })
}

impl CutoffDistance {
    /// `d` at every node of `grid`.
    pub fn sample(&self, grid: Grid) -> Result<Vec<f64>> {
        Ok(self
            .front
            .sample(grid)?
            .into_iter()
            .map(|s| self.cutoff.eval(s).0)
            .collect())
    }

    /// `(d, d', d'')` on the circle, with `|dbar'| = 1` inside the band.
    pub fn eval_1d(&self, v: f64) -> (f64, f64, f64) {
        let (s, slope) = self.front.distance_and_slope_1d(v);
        let (h, dh, d2h) = self.cutoff.eval(s);
        (h, dh * slope, d2h * slope * slope)
    }
}

/// `d0` for a front evolving over `[0, t_max]` at speed `c`: half of the
/// largest admissible value at the most constrained time, rounded down to a
/// power of two so that the cutoff breakpoints fall on dyadic lattices.
pub fn select_d0(front: &FrontState, c: f64, t_max: f64) -> Result<f64> {
    let steps = 16;
    let mut best = f64::INFINITY;
    for k in 0..=steps {
        let t = t_max * k as f64 / steps as f64;
        let m = max_band_d0(&huygens_evolve(front, c, t))
            .ok_or_else(|| Error::Domain(format!("no admissible band at t = {t}")))?;
        best = best.min(m);
    }
    let half = 0.5 * best;
    Ok(2f64.powi(half.log2().floor() as i32))
}

/// `sigma = min(sigma_max / 2, 1 / (8 max|f''|))` with `f''` over
/// `[0, 2 alpha_+]`.
pub fn select_sigma(sigma_max: f64, f: &ReactionPolynomial) -> f64 {
    let f2 = f.max_abs_second_on(0.0, 2.0 * f.alpha_plus);
    (0.5 * sigma_max).min(1.0 / (8.0 * f2))
}

/// Constants of the sub/super solutions
/// `u^+- = U(d/eps -+ p(t)) +- q(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubSuperParams {
    pub sigma: f64,
    pub l: f64,
    pub beta: f64,
    pub c_delta_d: f64,
    pub d0: f64,
    pub eps: f64,
    /// Horizon `T` of the construction.
    pub t_max: f64,
}

impl SubSuperParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.sigma, self.l, self.beta, self.d0, self.eps, self.t_max];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.c_delta_d < 0.0 {
            return domain(format!("sub/super parameters must be positive: {self:?}"));
        }
        Ok(())
    }

    /// `q(t) = 2 sigma beta exp(-beta t / (2 eps)) + 3 eps / beta`.
    pub fn q(&self, t: f64) -> f64 {
        2.0 * self.sigma * self.beta * (-self.beta * t / (2.0 * self.eps)).exp()
            + 3.0 * self.eps / self.beta
    }

    pub fn dq(&self, t: f64) -> f64 {
        -self.sigma * self.beta * self.beta / self.eps * (-self.beta * t / (2.0 * self.eps)).exp()
    }

    /// `p(t) = L + (3/(sigma beta) + C_dd) t + 4 (1 - exp(-beta t/(2 eps)))`.
    pub fn p(&self, t: f64) -> f64 {
        self.l
            + (3.0 / (self.sigma * self.beta) + self.c_delta_d) * t
            + 4.0 * (1.0 - (-self.beta * t / (2.0 * self.eps)).exp())
    }

    pub fn dp(&self, t: f64) -> f64 {
        3.0 / (self.sigma * self.beta)
            + self.c_delta_d
            + 2.0 * self.beta / self.eps * (-self.beta * t / (2.0 * self.eps)).exp()
    }
}

/// Sub and super solution fields at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSuper {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// `u^+-(t, v)` at the nodes of `grid`, with the front evolved from
/// `front0` by Huygens' principle at the wave speed.
pub fn build_sub_super(
    params: &SubSuperParams,
    wave: &WaveProfile,
    front0: &FrontState,
    t: f64,
    grid: Grid,
) -> Result<SubSuper> {
    params.validate()?;
    if t < 0.0 || t > params.t_max * (1.0 + 1e-12) {
        return domain(format!("time {t} outside [0, T = {}]", params.t_max));
    }
    let front = huygens_evolve(front0, wave.c_star, t);
    let cut = Cutoff::new(params.d0)?;
    let dbar = front.sample(grid)?;
    let (p, q) = (params.p(t), params.q(t));
    let mut lower = Vec::with_capacity(dbar.len());
    let mut upper = Vec::with_capacity(dbar.len());
    for s in dbar {
        let z = cut.eval(s).0 / params.eps;
        upper.push(wave.value(z - p) + q);
        lower.push(wave.value(z + p) - q);
    }
    Ok(SubSuper { lower, upper })
}

/// `L^eps u = du/dt - eps Lap u - f(u)/eps` by central differences from
/// samples at `t - tau`, `t`, `t + tau` on `grid`.
pub fn residual_fd(
    prev: &[f64],
    cur: &[f64],
    next: &[f64],
    tau: f64,
    grid: Grid,
    eps: f64,
    f: &ReactionPolynomial,
) -> Vec<f64> {
    let mut lap = vec![0.0; cur.len()];
    laplacian_stencil(grid.dim, grid.side, cur, &mut lap);
    let n2 = (grid.side * grid.side) as f64;
    (0..cur.len())
        .map(|i| (next[i] - prev[i]) / (2.0 * tau) - eps * n2 * lap[i] - f.eval(cur[i]) / eps)
        .collect()
}

/// Extremes of the residual over space and sampled times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    /// `min L^eps u^+`.
    pub min_upper: f64,
    /// `max L^eps u^-`.
    pub max_lower: f64,
    pub times: usize,
}

/// Finite-difference residuals of `u^+-` at `times` on `grid`.
pub fn residual_summary_fd(
    params: &SubSuperParams,
    wave: &WaveProfile,
    front0: &FrontState,
    f: &ReactionPolynomial,
    grid: Grid,
    times: &[f64],
) -> Result<ResidualSummary> {
    let tau = time_step_for_residual(params, wave);
    let mut out = ResidualSummary {
        min_upper: f64::INFINITY,
        max_lower: f64::NEG_INFINITY,
        times: 0,
    };
    for &t in times {
        let t = t.clamp(tau, params.t_max - tau);
        let a = build_sub_super(params, wave, front0, t - tau, grid)?;
        let b = build_sub_super(params, wave, front0, t, grid)?;
        let c = build_sub_super(params, wave, front0, t + tau, grid)?;
        let ru = residual_fd(&a.upper, &b.upper, &c.upper, tau, grid, params.eps, f);
        let rl = residual_fd(&a.lower, &b.lower, &c.lower, tau, grid, params.eps, f);
        out.min_upper = ru.iter().copied().fold(out.min_upper, f64::min);
        out.max_lower = rl.iter().copied().fold(out.max_lower, f64::max);
        out.times += 1;
    }
    Ok(out)
}

/// Finite-difference and exact residuals of `u^+-` on the circle, with the
/// largest discrepancy between them over the sampled times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualComparison {
    pub fd: ResidualSummary,
    pub exact: ResidualSummary,
    pub max_fd_error: f64,
}

pub fn compare_residuals_1d(
    params: &SubSuperParams,
    wave: &WaveProfile,
    front0: &FrontState,
    f: &ReactionPolynomial,
    grid: Grid,
    times: &[f64],
) -> Result<ResidualComparison> {
    let tau = time_step_for_residual(params, wave);
    let empty = ResidualSummary {
        min_upper: f64::INFINITY,
        max_lower: f64::NEG_INFINITY,
        times: 0,
    };
    let (mut fd, mut exact, mut err) = (empty, empty, 0.0f64);
    for &t in times {
        let t = t.clamp(tau, params.t_max - tau);
        let a = build_sub_super(params, wave, front0, t - tau, grid)?;
        let b = build_sub_super(params, wave, front0, t, grid)?;
        let c = build_sub_super(params, wave, front0, t + tau, grid)?;
        let ru = residual_fd(&a.upper, &b.upper, &c.upper, tau, grid, params.eps, f);
        let rl = residual_fd(&a.lower, &b.lower, &c.lower, tau, grid, params.eps, f);
        let (eu, el) = residual_exact_1d(params, wave, front0, f, grid, t)?;
        for i in 0..ru.len() {
            err = err.max((ru[i] - eu[i]).abs()).max((rl[i] - el[i]).abs());
        }
        fd.min_upper = ru.iter().copied().fold(fd.min_upper, f64::min);
        fd.max_lower = rl.iter().copied().fold(fd.max_lower, f64::max);
        exact.min_upper = eu.iter().copied().fold(exact.min_upper, f64::min);
        exact.max_lower = el.iter().copied().fold(exact.max_lower, f64::max);
        fd.times += 1;
        exact.times += 1;
    }
    Ok(ResidualComparison {
        fd,
        exact,
        max_fd_error: err,
    })
}

/// Time step of the central difference in `t`: `10^-4` of the time
/// the profile needs to move by one decay length.
pub fn time_step_for_residual(params: &SubSuperParams, wave: &WaveProfile) -> f64 {
    let rate = wave.rate_left.max(wave.rate_right);
    let speed = params.dp(0.0) + wave.c_star.abs() / params.eps;
    1e-4 / (rate * speed)
}

/// Exact residual of `u^+-` on the circle from the derivatives of `U`, `h`
/// and `dbar` (`d_t dbar = -c_*`, `|dbar'| = 1`).
pub fn residual_exact_1d(
    params: &SubSuperParams,
    wave: &WaveProfile,
    front0: &FrontState,
    f: &ReactionPolynomial,
    grid: Grid,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if grid.dim != 1 || front0.dim() != 1 {
        return domain("exact residuals are implemented on the circle");
    }
    let front = huygens_evolve(front0, wave.c_star, t);
    let cut = CutoffDistance {
        front,
        cutoff: Cutoff::new(params.d0)?,
    };
    let eps = params.eps;
    let (p, dp, q, dq) = (params.p(t), params.dp(t), params.q(t), params.dq(t));
    let c = wave.c_star;
    let mut upper = Vec::with_capacity(grid.len());
    let mut lower = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let v = grid.position(i)[0];
        let (s, _) = cut.front.distance_and_slope_1d(v);
        let (d, dv, dvv) = cut.eval_1d(v);
        let (_, dh, _) = cut.cutoff.eval(s);
        let dt_d = -c * dh;
        for (sign, out) in [(1.0, &mut upper), (-1.0, &mut lower)] {
            let xi = d / eps - sign * p;
            let (u, du, d2u) = wave.eval(xi);
            let val = u + sign * q;
            let ut = du * (dt_d / eps - sign * dp) + sign * dq;
            let uvv = d2u * dv * dv / (eps * eps) + du * dvv / eps;
            out.push(ut - eps * uvv - f.eval(val) / eps);
        }
    }
    Ok((upper, lower))
}

/// Largest ratio `(1/sqrt K) |Lap u^+(x/N) - Lap^N u^+(x)| / (K / N)` on
/// the circle at time `t`, with `eps = 1/sqrt K`.
pub fn consistency_constant_1d(
    params: &SubSuperParams,
    wave: &WaveProfile,
    front0: &FrontState,
    n: usize,
    k: f64,
    t: f64,
) -> Result<f64> {
    let grid = Grid::lattice(1, n);
    let front = huygens_evolve(front0, wave.c_star, t);
    let cut = CutoffDistance {
        front,
        cutoff: Cutoff::new(params.d0)?,
    };
    let eps = params.eps;
    let p = params.p(t);
    let q = params.q(t);
    let mut values = Vec::with_capacity(n);
    let mut exact = Vec::with_capacity(n);
    for i in 0..n {
        let v = grid.position(i)[0];
        let (d, dv, dvv) = cut.eval_1d(v);
        let (u, du, d2u) = wave.eval(d / eps - p);
        values.push(u + q);
        exact.push(d2u * dv * dv / (eps * eps) + du * dvv / eps);
    }
    let mut lap = vec![0.0; n];
    laplacian_stencil(1, n, &values, &mut lap);
    let n2 = (n * n) as f64;
    let worst = (0..n)
        .map(|i| (exact[i] - n2 * lap[i]).abs())
        .fold(0.0, f64::max);
    Ok(worst / k.sqrt() / (k / n as f64))
}

/// Linear-interpolated crossings of `level` by a periodic 1D profile whose
/// nodes sit at `positions` (ascending, within one period).
pub fn crossings_1d(values: &[f64], positions: &[f64], level: f64) -> Vec<(f64, Orientation)> {
    let n = values.len();
    let mut out = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let (a, b) = (values[i] - level, values[j] - level);
        let xj = if j == 0 {
            positions[0] + 1.0
        } else {
            positions[j]
        };
        if a > 0.0 && b <= 0.0 {
            let x = positions[i] + (xj - positions[i]) * a / (a - b);
            out.push((x.rem_euclid(1.0), Orientation::Down));
        } else if a <= 0.0 && b > 0.0 {
            let x = positions[i] + (xj - positions[i]) * (-a) / (b - a);
            out.push((x.rem_euclid(1.0), Orientation::Up));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub speed: f64,
    /// Half width of the 95% confidence interval from the fit residuals.
    pub half_width: f64,
    pub intercept: f64,
    pub frames: usize,
}

impl SpeedEstimate {
    pub fn contains(&self, c: f64) -> bool {
        (self.speed - c).abs() <= self.half_width
    }
}

/// Speed of the unique crossing of `level` with the given orientation,
/// from a least-squares line through the unwrapped positions over the
/// frames whose time lies in `window`.
pub fn front_speed(
    times: &[f64],
    frames: &[Vec<f64>],
    positions: &[f64],
    level: f64,
    orientation: Orientation,
    window: (f64, f64),
) -> Result<SpeedEstimate> {
    let mut ts = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for (&t, frame) in times.iter().zip(frames) {
        if t < window.0 || t > window.1 {
            continue;
        }
        let found: Vec<f64> = crossings_1d(frame, positions, level)
            .into_iter()
            .filter(|c| c.1 == orientation)
            .map(|c| c.0)
            .collect();
        if found.len() != 1 {
            return Err(Error::Extraction(format!(
                "{} {:?} crossings of level {level} at t = {t}",
                found.len(),
                orientation
            )));
        }
        let mut x = found[0];
        if let Some(&prev) = xs.last() {
            x += (prev - x).round();
        }
        ts.push(t);
        xs.push(x);
    }
    fit_speed(&ts, &xs)
}

fn fit_speed(ts: &[f64], xs: &[f64]) -> Result<SpeedEstimate> {
    if ts.len() < 2 {
        return Err(Error::Extraction(
            "fewer than two frames in the fit window".into(),
        ));
    }
    let fit = linear_fit(ts, xs);
    let half_width = if ts.len() > 2 {
        t_quantile(0.95, (ts.len() - 2) as f64) * fit.slope_se
    } else {
        0.0
    };
    Ok(SpeedEstimate {
        speed: fit.slope,
        half_width,
        intercept: fit.intercept,
        frames: ts.len(),
    })
}

/// Outward normal speed of several fronts followed from their initial
/// crossings.
///
/// Every front in `initial` is matched, frame by frame from the first one,
/// to the nearest crossing of `level` with its orientation; spurious
/// crossings elsewhere (noise, nucleated droplets) are ignored. A `Down`
/// crossing has the upper phase on its left and moves outward in `+x`, an
/// `Up` crossing in `-x`. The outward displacements are averaged over the
/// fronts and fitted against time over `window`.
pub fn tracked_front_speed(
    times: &[f64],
    frames: &[Vec<f64>],
    positions: &[f64],
    level: f64,
    initial: &[(f64, Orientation)],
    window: (f64, f64),
) -> Result<SpeedEstimate> {
    if initial.is_empty() {
        return Err(Error::Extraction("no fronts to track".into()));
    }
    let mut current: Vec<f64> = initial.iter().map(|c| c.0).collect();
    let mut moved = vec![0.0; initial.len()];
    let (mut ts, mut xs) = (Vec::new(), Vec::new());
    for (&t, frame) in times.iter().zip(frames) {
        let found = crossings_1d(frame, positions, level);
        for (k, &(_, orientation)) in initial.iter().enumerate() {
            let periodic = |x: f64| (x - current[k] + 0.5).rem_euclid(1.0) - 0.5;
            let step = found
                .iter()
                .filter(|c| c.1 == orientation)
                .map(|c| periodic(c.0))
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .ok_or_else(|| {
                    Error::Extraction(format!(
                        "no {orientation:?} crossing of level {level} at t = {t}"
                    ))
                })?;
            current[k] = (current[k] + step).rem_euclid(1.0);
            moved[k] += match orientation {
                Orientation::Down => step,
                Orientation::Up => -step,
            };
        }
        if t >= window.0 && t <= window.1 {
            ts.push(t);
            xs.push(moved.iter().sum::<f64>() / moved.len() as f64);
        }
    }
    fit_speed(&ts, &xs)
}

/// Rows averaged into a profile along the first axis (planar fronts).
pub fn project_to_first_axis(frame: &[f64], dim: usize, side: usize) -> Vec<f64> {
    let per = side.pow(dim as u32 - 1);
    (0..side)
        .map(|i| frame[i * per..(i + 1) * per].iter().sum::<f64>() / per as f64)
        .collect()
}

/// `M1`: the largest `dbar(0, v) / eps` over nodes where `u_gen` exceeds
/// `alpha_- + sigma beta`, i.e. how far outside `G_0^+` generation has not
/// yet brought the solution down.
pub fn estimate_m1(u_gen: &[f64], dbar0: &[f64], eps: f64, threshold: f64) -> f64 {
    u_gen
        .iter()
        .zip(dbar0)
        .filter(|(&u, _)| u > threshold)
        .map(|(_, &d)| d / eps)
        .fold(0.0, f64::max)
}

/// Smallest `L` on a doubling ladder, starting from the requirement
/// `U(M1 - L) >= alpha_+ - sigma beta` (and its mirror for `u^-`), for which
/// `u^-(0) <= u_gen <= u^+(0)` holds at every node of `grid`.
pub fn search_l(
    params: &SubSuperParams,
    wave: &WaveProfile,
    front0: &FrontState,
    u_gen: &[f64],
    grid: Grid,
    m1: f64,
) -> Result<f64> {
    let sb = params.sigma * params.beta;
    let z_plus = inverse_profile(wave, wave.alpha_plus - sb)?;
    let z_minus = inverse_profile(wave, wave.alpha_minus + sb)?;
    let mut l = (m1 - z_plus).max(m1 + z_minus).max(1e-3);
    for _ in 0..40 {
        let trial = SubSuperParams { l, ..*params };
        let s = build_sub_super(&trial, wave, front0, 0.0, grid)?;
        let ok = u_gen
            .iter()
            .zip(s.lower.iter().zip(&s.upper))
            .all(|(&u, (&lo, &hi))| lo <= u && u <= hi);
        if ok {
            return Ok(l);
        }
        l *= 2.0;
    }
    domain("no L on the doubling ladder sandwiches the generated profile")
}

/// `z` with `U(z) = level` for `alpha_- < level < alpha_+`.
pub fn inverse_profile(wave: &WaveProfile, level: f64) -> Result<f64> {
    if !(level > wave.alpha_minus && level < wave.alpha_plus) {
        return domain(format!(
            "level {level} is outside the range ({}, {}) of the wave",
            wave.alpha_minus, wave.alpha_plus
        ));
    }
    let (mut lo, mut hi) = (-wave.z_max, wave.z_max);
    while wave.value(lo) < level {
        lo *= 2.0;
    }
    while wave.value(hi) > level {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if wave.value(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_distances() {
        let f = FrontState::from_intervals(&[(0.2, 0.6)]).unwrap();
        assert!((f.signed_distance_at(&[0.4]) + 0.2).abs() < 1e-15);
        assert!((f.signed_distance_at(&[0.8]) - 0.2).abs() < 1e-15);
        assert!((f.signed_distance_at(&[0.0]) - 0.2).abs() < 1e-15);
        assert!(FrontState::from_intervals(&[]).is_err());
        assert!(FrontState::from_intervals(&[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn arcs_merge_across_zero() {
        let f = FrontState::from_intervals(&[(0.9, 1.05), (0.0, 0.1), (0.5, 0.6)]).unwrap();
        let FrontState::Line { intervals } = f else {
            unreachable!()
        };
        assert_eq!(intervals.len(), 2);
        assert!((intervals[1].0 - 0.9).abs() < 1e-15 && (intervals[1].1 - 1.1).abs() < 1e-15);
    }

    #[test]
    fn huygens_on_circle() {
        let f = FrontState::from_intervals(&[(0.4, 0.5)]).unwrap();
        assert_eq!(huygens_evolve(&f, 1.0, 0.0), f);
        let g = huygens_evolve(&f, 0.5, 0.1);
        assert!((g.signed_distance_at(&[0.45]) + 0.1).abs() < 1e-14);
        assert!(huygens_evolve(&f, 1.0, 0.5).is_full());
        let t = first_topology_change(&f, 1.0, 1.0, 0).unwrap();
        assert!((t - 0.45).abs() < 1e-14);
    }

    #[test]
    fn cutoff_shape() {
        let h = Cutoff::new(0.1).unwrap();
        assert_eq!(h.eval(0.05).0, 0.05);
        assert!((h.eval(0.3).0 - 0.2).abs() < 1e-15);
        assert!((h.eval(-0.5).0 + 0.2).abs() < 1e-15);
        let mut prev = h.eval(0.1);
        for k in 1..=2000 {
            let s = 0.1 + 0.2 * k as f64 / 2000.0;
            let cur = h.eval(s);
            assert!((0.0..=1.0).contains(&cur.1));
            // the derivatives are consistent with the values
            let ds = 0.2 / 2000.0;
            assert!(((cur.0 - prev.0) / ds - 0.5 * (cur.1 + prev.1)).abs() < 1e-6);
            assert!(((cur.1 - prev.1) / ds - 0.5 * (cur.2 + prev.2)).abs() < 1e-4);
            prev = cur;
        }
        assert!((h.eval(0.2).2.abs() - h.max_second_derivative()).abs() < 1e-12);
    }

    #[test]
    fn crossing_extraction() {
        let pos: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let v = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let c = crossings_1d(&v, &pos, 0.5);
        assert_eq!(c.len(), 2);
        assert!((c[0].0 - 0.15).abs() < 1e-15 && c[0].1 == Orientation::Up);
        assert!((c[1].0 - 0.45).abs() < 1e-15 && c[1].1 == Orientation::Down);
    }

    #[test]
    fn disk_distance_by_redistance() {
        let grid = Grid::cells(2, 128);
        let r = 0.2;
        let phi: Vec<f64> = (0..grid.len())
            .map(|i| {
                let v = grid.position(i);
                ((v[0] - 0.5).powi(2) + (v[1] - 0.5).powi(2)).sqrt() - r
            })
            .collect();
        let f = FrontState::plane_from_level_set(grid, &phi).unwrap();
        let exact = f.sample(grid).unwrap();
        let worst = exact
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
        let FrontState::Plane { dist, .. } = &f else {
            unreachable!()
        };
        assert!(eikonal_defect(grid, dist, 0.1) < EIKONAL_TOLERANCE);
    }
}
