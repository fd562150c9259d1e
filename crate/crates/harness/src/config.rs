//! Experiment configuration.
//!
//! A configuration is a TOML or JSON document (chosen by file extension)
//! deserialised into [`ExperimentConfig`]. Command-line overrides of the
//! form `path.to.key=value` are applied to the parsed document before
//! deserialisation, so they are checked by the same schema. Values are
//! read as JSON when they parse as JSON and as strings otherwise.

use std::path::{Path, PathBuf};

use gk_core::front::{crossings_1d, FrontState, Grid, Orientation};
use gk_core::lattice::LocalWindow;
use gk_core::rates::{design_rates, RateFunction, ReactionPolynomial};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{config_error, HarnessError, Result};

/// Resolution of the grid carrying a planar initial front.
pub const PLANE_FRONT_RESOLUTION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub k: KSchedule,
    /// `delta` in the schedule check `K <= delta sqrt(log N)`.
    #[serde(default = "default_schedule_delta")]
    pub schedule_delta: f64,
    #[serde(default)]
    pub initial: InitialProfile,
    #[serde(default)]
    pub control: Control,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output times are `t_end * i / frames` for `i = 0..=frames`.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_frames")]
    pub frames: usize,
    /// Block side, in sites, of the coarse-grained densities.
    #[serde(default = "default_block")]
    pub block: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub hydro: HydroConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_schedule_delta() -> f64 {
    1.0
}
fn default_replicas() -> usize {
    20
}
fn default_seed() -> u64 {
    20_240_601
}
fn default_t_end() -> f64 {
    0.15
}
fn default_frames() -> usize {
    30
}
fn default_block() -> usize {
    16
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("all fields have defaults")
    }
}

/// Reaction model: a target cubic realised by designed nearest-neighbour
/// rates, or an explicit rate table whose reaction polynomial is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `f(u) = scale (u - a_-)(a_+ - u)(u - a_*)` with `roots = [a_-, a_*, a_+]`.
    Cubic {
        scale: f64,
        roots: [f64; 3],
        #[serde(default = "default_radius")]
        radius: usize,
    },
    /// Rates indexed by window patterns (see `gk_core::rates::BIT_ORDER`).
    Table { radius: usize, table: Vec<f64> },
}

fn default_radius() -> usize {
    1
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::Cubic {
            scale: 200.0,
            roots: [0.25, 0.45, 0.75],
            radius: 1,
        }
    }
}

impl ModelConfig {
    /// The reaction polynomial and a rate table realising it in dimension `dim`.
    pub fn build(&self, dim: usize) -> Result<(ReactionPolynomial, RateFunction)> {
        match self {
            Self::Cubic {
                scale,
                roots,
                radius,
            } => {
                let f = ReactionPolynomial::cubic(*scale, roots[0], roots[1], roots[2])?;
                let rates = design_rates(&f.polynomial(), &LocalWindow::new(dim, *radius))?;
                Ok((f, rates))
            }
            Self::Table { radius, table } => {
                let rates = RateFunction::new(LocalWindow::new(dim, *radius), table.clone())?;
                let f = ReactionPolynomial::new(rates.reaction_polynomial())?;
                Ok((f, rates))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dim: usize,
    pub n: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { dim: 1, n: 512 }
    }
}

/// `K` as a function of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KSchedule {
    Fixed {
        value: f64,
    },
    /// `K = factor sqrt(log N)`.
    SqrtLog {
        factor: f64,
    },
    /// `K = coefficient N^exponent`.
    Power {
        coefficient: f64,
        exponent: f64,
    },
}

impl Default for KSchedule {
    fn default() -> Self {
        Self::Fixed { value: 25.0 }
    }
}

impl KSchedule {
    pub fn at(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Self::Fixed { value } => value,
            Self::SqrtLog { factor } => factor * nf.ln().sqrt(),
            Self::Power {
                coefficient,
                exponent,
            } => coefficient * nf.powf(exponent),
        }
    }
}

/// Control experiments with a known null result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    #[default]
    None,
    /// A balanced `f`: the front should not move.
    Balanced,
    /// Flip rates switched off: pure stirring, no reaction.
    GlauberOff,
}

/// Parametric or sampled initial density `u0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// `u0 = m + a tanh(-dbar / width - s)` in 1D, with `m, a` the centre
    /// and half range of `[low, high]`, `dbar` the signed distance to the
    /// union of `intervals` (negative inside) and `s` chosen so that the
    /// `alpha_*` level set is exactly the interval endpoints.
    Tanh {
        intervals: Vec<[f64; 2]>,
        width: f64,
        low: f64,
        high: f64,
    },
    /// The same profile around a disk on the 2-torus.
    Disk {
        center: [f64; 2],
        radius: f64,
        width: f64,
        low: f64,
        high: f64,
    },
    Constant {
        value: f64,
    },
    /// Values at the lattice sites `x / N` of the configured geometry,
    /// interpolated to the nearest site elsewhere.
    Samples {
        values: Vec<f64>,
    },
}

impl Default for InitialProfile {
    fn default() -> Self {
        Self::Tanh {
            intervals: vec![[0.375, 0.625]],
            width: 0.05,
            low: 0.2,
            high: 0.8,
        }
    }
}

/// An initial profile bound to `alpha_*` and a geometry.
#[derive(Debug, Clone)]
pub struct PreparedProfile {
    profile: InitialProfile,
    dim: usize,
    side: usize,
    shift: f64,
    front: Option<FrontState>,
}

impl InitialProfile {
    pub fn prepare(&self, dim: usize, side: usize, alpha_star: f64) -> Result<PreparedProfile> {
        let tanh_shift = |low: f64, high: f64| -> Result<f64> {
            let (m, a) = (0.5 * (low + high), 0.5 * (high - low));
            if !(a > 0.0 && (m - alpha_star).abs() < a) {
                return config_error(format!(
                    "tanh range [{low}, {high}] must strictly contain alpha_* = {alpha_star}"
                ));
            }
            Ok(((m - alpha_star) / a).atanh())
        };
        let (shift, front) = match self {
            Self::Tanh {
                intervals,
                width,
                low,
                high,
            } => {
                if dim != 1 {
                    return config_error("the tanh profile is one-dimensional; use a disk in 2D");
                }
                if !(*width > 0.0) {
                    return config_error("tanh width must be positive");
                }
                let arcs: Vec<(f64, f64)> = intervals.iter().map(|p| (p[0], p[1])).collect();
                (
                    tanh_shift(*low, *high)?,
                    Some(FrontState::from_intervals(&arcs)?),
                )
            }
            Self::Disk {
                center,
                radius,
                width,
                low,
                high,
            } => {
                if dim != 2 {
                    return config_error("the disk profile needs a two-dimensional geometry");
                }
                if !(*width > 0.0 && *radius > 0.0 && *radius < 0.5) {
                    return config_error("disk radius must lie in (0, 1/2) and width be positive");
                }
                let grid = Grid::lattice(2, PLANE_FRONT_RESOLUTION);
                let phi: Vec<f64> = (0..grid.len())
                    .map(|i| torus_distance(&grid.position(i), center) - radius)
                    .collect();
                (
                    tanh_shift(*low, *high)?,
                    Some(FrontState::plane_from_level_set(grid, &phi)?),
                )
            }
            Self::Constant { .. } => (0.0, None),
            Self::Samples { values } => {
                if values.len() != side.pow(dim as u32) {
                    return config_error(format!(
                        "{} samples for a torus with {} sites",
                        values.len(),
                        side.pow(dim as u32)
                    ));
                }
                (0.0, sampled_front(values, dim, side, alpha_star))
            }
        };
        Ok(PreparedProfile {
            profile: self.clone(),
            dim,
            side,
            shift,
            front,
        })
    }
}

fn torus_distance(v: &[f64], c: &[f64]) -> f64 {
    v.iter()
        .zip(c)
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(1.0);
            d.min(1.0 - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// The `alpha_*` level set of sampled data, or `None` if it is empty.
fn sampled_front(values: &[f64], dim: usize, side: usize, alpha_star: f64) -> Option<FrontState> {
    if dim == 1 {
        let pos: Vec<f64> = (0..side).map(|i| i as f64 / side as f64).collect();
        let cs = crossings_1d(values, &pos, alpha_star);
        let start = cs.iter().position(|c| c.1 == Orientation::Up)?;
        let mut arcs = Vec::new();
        for k in 0..cs.len() {
            let (a, o) = cs[(start + k) % cs.len()];
            if o == Orientation::Up {
                let b = cs[(start + k + 1) % cs.len()].0;
                arcs.push((a, if b > a { b } else { b + 1.0 }));
            }
        }
        FrontState::from_intervals(&arcs).ok()
    } else {
        let phi: Vec<f64> = values.iter().map(|u| alpha_star - u).collect();
        FrontState::plane_from_level_set(Grid::lattice(dim, side), &phi).ok()
    }
}

impl PreparedProfile {
    pub fn eval(&self, v: &[f64]) -> f64 {
        let tanh = |d: f64, width: f64, low: f64, high: f64| {
            0.5 * (low + high) + 0.5 * (high - low) * (-d / width - self.shift).tanh()
        };
        match &self.profile {
            InitialProfile::Tanh {
                width, low, high, ..
            } => {
                let d = self
                    .front
                    .as_ref()
                    .expect("tanh front")
                    .signed_distance_at(v);
                tanh(d, *width, *low, *high)
            }
            InitialProfile::Disk {
                center,
                radius,
                width,
                low,
                high,
            } => tanh(torus_distance(v, center) - radius, *width, *low, *high),
            InitialProfile::Constant { value } => *value,
            InitialProfile::Samples { values } => {
                let n = self.side;
                let idx = v
                    .iter()
                    .fold(0, |acc, &x| acc * n + ((x * n as f64).round() as usize % n));
                values[idx]
            }
        }
    }

    /// The `alpha_*` level set of `u0`, where one exists.
    pub fn front(&self) -> Option<&FrontState> {
        self.front.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Values at the nodes `(i + offset) / side` of a `side^dim` grid.
    pub fn sample(&self, side: usize, offset: f64) -> Vec<f64> {
        let total = side.pow(self.dim as u32);
        let mut v = vec![0.0; self.dim];
        (0..total)
            .map(|i| {
                gk_core::rd::node_position(self.dim, side, offset, i, &mut v);
                self.eval(&v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HydroConfig {
    /// Lattice sizes of the deviation sweep; empty means the configured `N` only.
    pub sizes: Vec<usize>,
    /// Time at which deviations are compared across sizes; defaults to `t_end`.
    pub match_time: Option<f64>,
    /// Fit window of the speed; defaults to `[2 t^N, t_end]`.
    pub speed_window: Option<[f64; 2]>,
    /// Relative tolerance of the measured speed against `c_*`.
    pub speed_tolerance: f64,
}

impl Default for HydroConfig {
    fn default() -> Self {
        Self {
            sizes: Vec::new(),
            match_time: None,
            speed_window: None,
            speed_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    pub sizes: Vec<usize>,
    pub k: KSchedule,
    /// Nodes within `band K^(-1/4)` of the front are excluded from the
    /// agreement fraction; the layer itself is `O(K^(-1/2))` wide.
    pub band: f64,
    /// A cell agrees when `|u - chi| <= tolerance`.
    pub tolerance: f64,
    pub speed_window: Option<[f64; 2]>,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            sizes: vec![128, 256, 512],
            k: KSchedule::Power {
                coefficient: 1.0,
                exponent: 0.3,
            },
            band: 0.3,
            tolerance: 0.05,
            speed_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub eps: f64,
    /// Cells of the coarse residual grid; the fine grid doubles it.
    pub grid: usize,
    /// Residual margin required on both grids.
    pub residual_margin: f64,
    /// Number of uniform residual times on `[0, T]` (plus an early cluster).
    pub residual_times: usize,
    /// `sigma = sigma_factor * sigma_max` instead of the automatic choice.
    pub sigma_factor: Option<f64>,
    /// `T` as a fraction of the first topology change.
    pub horizon_fraction: f64,
    pub generation_delta: f64,
    pub sandwich_n: usize,
    pub sandwich_k: f64,
    pub sandwich_frames: usize,
    pub comparison_tolerance: f64,
    pub consistency_sizes: Vec<usize>,
    /// Largest admissible `max C / min C` over the consistency sizes.
    pub consistency_spread: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            eps: 0.02,
            grid: 2048,
            residual_margin: 0.5,
            residual_times: 200,
            sigma_factor: None,
            horizon_fraction: 0.8,
            generation_delta: 0.05,
            sandwich_n: 512,
            sandwich_k: 25.0,
            sandwich_frames: 60,
            comparison_tolerance: 1e-9,
            consistency_sizes: vec![256, 512, 1024],
            consistency_spread: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub n: usize,
    pub k: f64,
    pub times: Vec<f64>,
    pub replicas: u64,
    /// Occupancy of the initial configuration, site by site.
    pub initial: Vec<u8>,
    /// Confidence level of the chi-square test.
    pub level: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n: 4,
            k: 4.0,
            times: vec![0.1, 0.5],
            replicas: 100_000,
            initial: vec![1, 1, 0, 0],
            level: 0.99,
        }
    }
}

impl ExperimentConfig {
    /// Loads a TOML (`.toml`) or JSON (anything else) file and applies the
    /// `key=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parse_err = |message: String| HarnessError::Parse {
            path: path.display().to_string(),
            message,
        };
        let doc: Value = if path.extension().is_some_and(|e| e == "toml") {
            let t: toml::Value = toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
            serde_json::to_value(t)?
        } else {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        Self::from_value(doc, overrides)
    }

    /// Deserialises `doc` after applying overrides.
    pub fn from_value(mut doc: Value, overrides: &[String]) -> Result<Self> {
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_json::from_value(doc).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        Self::from_value(serde_json::to_value(self)?, overrides)
    }

    pub fn output_times(&self) -> Vec<f64> {
        let m = self.frames.max(1);
        (0..=m).map(|i| self.t_end * i as f64 / m as f64).collect()
    }

    pub fn k_at(&self, n: usize) -> f64 {
        self.k.at(n)
    }

    /// Canonical JSON used for hashing and `config.json`.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sets `path.to.key` in `doc`, creating objects along the way.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let Some((path, raw)) = assignment.split_once('=') else {
        return config_error(format!(
            "override `{assignment}` is not of the form key=value"
        ));
    };
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let keys: Vec<&str> = path.trim().split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
