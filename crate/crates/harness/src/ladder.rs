//! Deterministic lattice problem along an `(N, K)` ladder.
//!
//! For every rung the lattice solution is compared node by node with
//! `chi_{Gamma_t}` away from a neighbourhood of the moving front whose
//! width `band K^(-1/4)` shrinks along the ladder, more slowly than the
//! `K^(-1/2)` transition layer. A node agrees when the
//! solution is within `tolerance` of the phase value. The front speed is
//! measured on the same frames.

use gk_core::front::{chi_field, huygens_evolve, Grid, SpeedEstimate};
use gk_core::lattice::TorusGeometry;
use gk_core::rates::derived_constants;
use gk_core::rd::{solve_pnk, GenerationScale, LatticeField};
use gk_core::wave::{solve_wave, WaveOptions};
use serde::{Deserialize, Serialize};

use crate::config::{Control, ExperimentConfig};
use crate::error::{config_error, HarnessError, Result};
use crate::hydro::measure_speed;
use crate::validate::{validate_config, Selection};

/// Speeds below this count as a front at rest.
const AT_REST: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub n: usize,
    pub k: f64,
    pub times: Vec<f64>,
    /// Agreement fraction at every output time.
    pub agreement: Vec<f64>,
    /// Fraction of nodes inside the excluded neighbourhood at every time.
    pub excluded: Vec<f64>,
    pub speed_window: (f64, f64),
    pub speed: Option<SpeedEstimate>,
    pub speed_failure: Option<String>,
    /// `|speed - reference|`.
    pub speed_error: Option<f64>,
    pub steps: u64,
}

impl Rung {
    pub fn final_agreement(&self) -> f64 {
        *self.agreement.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderResults {
    pub c_star: f64,
    /// `c_*`, or zero for the balanced control.
    pub reference_speed: f64,
    pub rungs: Vec<Rung>,
    /// Final agreement fractions are non-decreasing along the ladder.
    pub agreement_monotone: bool,
    /// Speed errors strictly decrease along the ladder.
    pub speed_error_decreasing: bool,
    /// Agreement is monotone and, for the balanced control, every rung is
    /// at rest; otherwise the speed errors decrease.
    pub passed: bool,
}

pub fn run_pde_ladder(cfg: &ExperimentConfig) -> Result<LadderResults> {
    let report = validate_config(cfg, Selection::Ladder);
    if !report.passed() {
        return Err(HarnessError::Validation(report.failures()));
    }
    if cfg.ladder.sizes.is_empty() {
        return config_error("the ladder needs at least one size");
    }
    let dim = cfg.geometry.dim;
    let (f, _) = cfg.model.build(dim)?;
    let opts = WaveOptions::automatic(&f)?;
    let wave = solve_wave(&f, opts.z_max, opts.h, opts.tol)?;
    let reference_speed = if cfg.control == Control::Balanced {
        0.0
    } else {
        wave.c_star
    };
    let profile = cfg.initial.prepare(dim, cfg.geometry.n, f.alpha_star)?;
    let Some(front0) = profile.front().cloned() else {
        return config_error("the ladder needs an initial profile with a front");
    };
    let times = cfg.output_times();
    let mut rungs = Vec::with_capacity(cfg.ladder.sizes.len());
    for &n in &cfg.ladder.sizes {
        let k = cfg.ladder.k.at(n);
        let geometry = TorusGeometry::new(dim, n)?;
        let u0 = LatticeField::new(geometry, profile.sample(n, 0.0))?;
        let traj = solve_pnk(&u0, &f, k, cfg.t_end, &times)?;
        let grid = Grid::lattice(dim, n);
        let radius = cfg.ladder.band / k.powf(0.25);
        let mut agreement = Vec::with_capacity(traj.frames.len());
        let mut excluded = Vec::with_capacity(traj.frames.len());
        for (&t, frame) in traj.times.iter().zip(&traj.frames) {
            let front = huygens_evolve(&front0, wave.c_star, t);
            let chi = chi_field(&front, f.alpha_minus, f.alpha_plus, grid)?;
            let dist = front.sample(grid)?;
            let (mut kept, mut good) = (0usize, 0usize);
            for i in 0..frame.len() {
                if dist[i].abs() > radius {
                    kept += 1;
                    if (frame[i] - chi[i]).abs() <= cfg.ladder.tolerance {
                        good += 1;
                    }
                }
            }
            agreement.push(if kept == 0 {
                f64::NAN
            } else {
                good as f64 / kept as f64
            });
            excluded.push(1.0 - kept as f64 / frame.len() as f64);
        }
        let speed_window = match cfg.ladder.speed_window {
            Some([a, b]) => (a, b),
            None => {
                let gamma = derived_constants(&f, min(&u0.values), max(&u0.values))?.gamma;
                (2.0 * GenerationScale::Lattice { k }.time(gamma), cfg.t_end)
            }
        };
        let positions: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let (speed, speed_failure) = match measure_speed(
            &traj.times,
            &traj.frames,
            &positions,
            &front0,
            f.alpha_star,
            speed_window,
        ) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        rungs.push(Rung {
            n,
            k,
            times: traj.times.clone(),
            agreement,
            excluded,
            speed_window,
            speed,
            speed_failure,
            speed_error: speed.map(|s| (s.speed - reference_speed).abs()),
            steps: traj.steps,
        });
    }
    let finals: Vec<f64> = rungs.iter().map(Rung::final_agreement).collect();
    let agreement_monotone =
        finals.iter().all(|a| a.is_finite()) && finals.windows(2).all(|w| w[1] >= w[0]);
    let errors: Option<Vec<f64>> = rungs.iter().map(|r| r.speed_error).collect();
    let speed_error_decreasing = errors.is_some_and(|e| e.windows(2).all(|w| w[1] < w[0]));
    let speeds_ok = if cfg.control == Control::Balanced {
        rungs.iter().all(|r| {
            r.speed
                .is_some_and(|s| s.contains(0.0) || s.speed.abs() < AT_REST)
        })
    } else {
        speed_error_decreasing
    };
    Ok(LadderResults {
        passed: agreement_monotone && speeds_ok,
        c_star: wave.c_star,
        reference_speed,
        rungs,
        agreement_monotone,
        speed_error_decreasing,
    })
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
