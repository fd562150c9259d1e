//! Hydrodynamic experiment: replicas of the particle system against the
//! sharp-interface limit.
//!
//! Each replica starts from the product measure with the sampled initial
//! profile and is observed at the output times. At every observation the
//! pairings `<alpha^N(t), phi>` for the test-function family are compared
//! with `<chi_{Gamma_t}, phi>`, where `Gamma_t` is the initial front moved
//! by Huygens' principle at the wave speed. The front speed is measured on
//! the replica-averaged block densities.

use std::f64::consts::PI;

use gk_core::front::{
    chi_field, huygens_evolve, tracked_front_speed, FrontState, Grid, SpeedEstimate,
};
use gk_core::kmc::{
    empirical_measure, replica_seed, sample_product_measure, simulate, EventCounts,
};
use gk_core::lattice::TorusGeometry;
use gk_core::rates::{derived_constants, RateFunction, ReactionPolynomial};
use gk_core::rd::GenerationScale;
use gk_core::stats::{linear_fit, t_quantile};
use gk_core::wave::{solve_wave, WaveOptions};
use serde::{Deserialize, Serialize};

use crate::config::{Control, ExperimentConfig, PreparedProfile};
use crate::error::{config_error, HarnessError, Result};
use crate::pool::run_indexed;
use crate::validate::{validate_config, Selection};

/// Cells per side of the grid carrying `chi_{Gamma_t}` in 1D and 2D.
const CHI_CELLS_1D: usize = 20_000;
const CHI_CELLS_2D: usize = 400;

/// Test functions `{1, cos 2 pi v, sin 2 pi v, cos 4 pi v}` in 1D and their
/// tensor products in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    One,
    Cos1,
    Sin1,
    Cos2,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::One, Mode::Cos1, Mode::Sin1, Mode::Cos2];

    pub fn eval(self, v: f64) -> f64 {
        match self {
            Mode::One => 1.0,
            Mode::Cos1 => (2.0 * PI * v).cos(),
            Mode::Sin1 => (2.0 * PI * v).sin(),
            Mode::Cos2 => (4.0 * PI * v).cos(),
        }
    }
}

/// The test-function family of dimension `dim`, as tuples of modes.
pub fn test_functions(dim: usize) -> Vec<Vec<Mode>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                Mode::ALL.iter().map(move |&m| {
                    let mut p = prefix.clone();
                    p.push(m);
                    p
                })
            })
            .collect();
    }
    out
}

fn eval_tensor(modes: &[Mode], v: &[f64]) -> f64 {
    modes.iter().zip(v).map(|(m, &x)| m.eval(x)).product()
}

/// One lattice size of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroRun {
    pub n: usize,
    pub k: f64,
    pub block: usize,
    pub times: Vec<f64>,
    /// Replica-averaged block densities, one row per output time.
    pub mean_density: Vec<Vec<f64>>,
    /// `sup_phi |<alpha^N, phi> - <chi, phi>|`, indexed `[time][replica]`.
    pub deviation: Vec<Vec<f64>>,
    /// `<alpha^N, 1>`, indexed `[time][replica]`.
    pub mass: Vec<Vec<f64>>,
    /// `<chi_{Gamma_t}, phi>` for every test function, indexed `[time][phi]`.
    pub targets: Vec<Vec<f64>>,
    pub events: Vec<EventCounts>,
}

impl HydroRun {
    pub fn mean_deviation(&self, frame: usize) -> f64 {
        mean(&self.deviation[frame])
    }

    /// Standard deviation over replicas of `<alpha^N, 1>`.
    pub fn mass_spread(&self, frame: usize) -> f64 {
        std_dev(&self.mass[frame])
    }

    /// Positions of the block centres along the first axis.
    pub fn block_centres(&self) -> Vec<f64> {
        let m = self.n / self.block;
        (0..m)
            .map(|b| {
                (b * self.block) as f64 / self.n as f64
                    + (self.block as f64 - 1.0) / (2.0 * self.n as f64)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroResults {
    pub c_star: f64,
    /// Speed the front should have: `c_*`, or zero without Glauber moves.
    pub reference_speed: f64,
    pub control: Control,
    pub runs: Vec<HydroRun>,
    /// Output time closest to the configured matching time.
    pub match_time: f64,
    /// Replica-mean deviation at `match_time`, one entry per run.
    pub deviation_at_match: Vec<f64>,
    pub deviation_decreasing: bool,
    pub speed_window: (f64, f64),
    /// Speed measured on the run with the configured `N`.
    pub speed: Option<SpeedEstimate>,
    pub speed_error: Option<String>,
    pub speed_relative_error: Option<f64>,
    /// Whether the measured speed is within tolerance of the reference,
    /// or, for the Glauber-off control, whether its interval contains zero.
    pub speed_passed: bool,
}

impl HydroResults {
    pub fn main_run(&self, n: usize) -> Option<&HydroRun> {
        self.runs.iter().find(|r| r.n == n)
    }
}

/// Validates `cfg` (including the `K` schedule), runs every configured
/// size and summarises.
pub fn run_hydrodynamic(cfg: &ExperimentConfig, workers: usize) -> Result<HydroResults> {
    run(cfg, workers, Selection::Hydro)
}

/// Replicas at the configured `N` only, without the schedule check.
pub fn run_kmc(cfg: &ExperimentConfig, workers: usize) -> Result<HydroResults> {
    let mut single = cfg.clone();
    single.hydro.sizes.clear();
    run(&single, workers, Selection::Kmc)
}

fn run(cfg: &ExperimentConfig, workers: usize, selection: Selection) -> Result<HydroResults> {
    let report = validate_config(cfg, selection);
    if !report.passed() {
        return Err(HarnessError::Validation(report.failures()));
    }
    let dim = cfg.geometry.dim;
    let (f, designed) = cfg.model.build(dim)?;
    let opts = WaveOptions::automatic(&f)?;
    let wave = solve_wave(&f, opts.z_max, opts.h, opts.tol)?;
    let (rates, reference_speed) = match cfg.control {
        Control::GlauberOff => (RateFunction::constant(designed.window().clone(), 0.0)?, 0.0),
        _ => (designed, wave.c_star),
    };
    let profile = cfg.initial.prepare(dim, cfg.geometry.n, f.alpha_star)?;
    let Some(front0) = profile.front().cloned() else {
        return config_error("the hydrodynamic experiment needs an initial profile with a front");
    };
    let mut sizes = cfg.hydro.sizes.clone();
    if !sizes.contains(&cfg.geometry.n) {
        sizes.push(cfg.geometry.n);
    }
    sizes.sort_unstable();
    sizes.dedup();
    let times = cfg.output_times();
    let targets = chi_targets(&front0, reference_speed, &f, dim, &times)?;
    let mut runs = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        runs.push(run_size(
            cfg, &profile, &rates, n, &times, &targets, workers,
        )?);
    }

    let match_time = cfg.hydro.match_time.unwrap_or(cfg.t_end);
    let frame = nearest_index(&times, match_time);
    let deviation_at_match: Vec<f64> = runs.iter().map(|r| r.mean_deviation(frame)).collect();
    let deviation_decreasing = deviation_at_match.windows(2).all(|w| w[1] < w[0]);

    let main = runs
        .iter()
        .find(|r| r.n == cfg.geometry.n)
        .expect("configured size is run");
    let speed_window = match cfg.hydro.speed_window {
        Some([a, b]) => (a, b),
        None => {
            let u = profile.sample(cfg.geometry.n, 0.0);
            let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let gamma = derived_constants(&f, lo, hi)?.gamma;
            (
                2.0 * GenerationScale::Lattice { k: main.k }.time(gamma),
                cfg.t_end,
            )
        }
    };
    let measured = measure_speed(
        &main.times,
        &main.mean_density,
        &main.block_centres(),
        &front0,
        f.alpha_star,
        speed_window,
    );
    let (speed, speed_error) = match measured {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let speed_relative_error = speed
        .filter(|_| reference_speed != 0.0)
        .map(|s| ((s.speed - reference_speed) / reference_speed).abs());
    let speed_passed = match (cfg.control, speed) {
        (Control::GlauberOff, Some(s)) => s.contains(0.0),
        (_, Some(_)) => speed_relative_error.is_some_and(|e| e <= cfg.hydro.speed_tolerance),
        (_, None) => false,
    };
    Ok(HydroResults {
        c_star: wave.c_star,
        reference_speed,
        control: cfg.control,
        runs,
        match_time: times[frame],
        deviation_at_match,
        deviation_decreasing,
        speed_window,
        speed,
        speed_error,
        speed_relative_error,
        speed_passed,
    })
}

/// `<chi_{Gamma_t}, phi>` for every output time and test function.
fn chi_targets(
    front0: &FrontState,
    speed: f64,
    f: &ReactionPolynomial,
    dim: usize,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let side = if dim == 1 { CHI_CELLS_1D } else { CHI_CELLS_2D };
    let grid = Grid::cells(dim, side);
    let phis = test_functions(dim);
    let table: Vec<Vec<f64>> = phis
        .iter()
        .map(|p| {
            (0..grid.len())
                .map(|i| eval_tensor(p, &grid.position(i)))
                .collect()
        })
        .collect();
    times
        .iter()
        .map(|&t| {
            let chi = chi_field(
                &huygens_evolve(front0, speed, t),
                f.alpha_minus,
                f.alpha_plus,
                grid,
            )?;
            Ok(table
                .iter()
                .map(|phi| chi.iter().zip(phi).map(|(c, p)| c * p).sum::<f64>() / grid.len() as f64)
                .collect())
        })
        .collect()
}

struct Replica {
    densities: Vec<Vec<f64>>,
    deviation: Vec<f64>,
    mass: Vec<f64>,
    events: EventCounts,
}

fn run_size(
    cfg: &ExperimentConfig,
    profile: &PreparedProfile,
    rates: &RateFunction,
    n: usize,
    times: &[f64],
    targets: &[Vec<f64>],
    workers: usize,
) -> Result<HydroRun> {
    let dim = cfg.geometry.dim;
    let geometry = TorusGeometry::new(dim, n)?;
    let block = block_for(cfg, n)?;
    let k = cfg.k_at(n);
    let u0 = profile.sample(n, 0.0);
    let sites = geometry.num_sites();
    let phis = test_functions(dim);
    let phi_table: Vec<Vec<f64>> = phis
        .iter()
        .map(|p| {
            (0..sites)
                .map(|x| {
                    let v: Vec<f64> = geometry
                        .coords(x)
                        .iter()
                        .map(|&c| c as f64 / n as f64)
                        .collect();
                    eval_tensor(p, &v)
                })
                .collect()
        })
        .collect();
    // Replica seeds are salted by the lattice size so the sweep sizes are
    // independent of each other.
    let base = cfg.seed ^ ((n as u64) << 32);
    let replicas = run_indexed(cfg.replicas, workers, |r| {
        let eta0 = sample_product_measure(geometry, &u0, replica_seed(base, 2 * r as u64))?;
        let mut densities = Vec::with_capacity(times.len());
        let mut deviation = Vec::with_capacity(times.len());
        let mut mass = Vec::with_capacity(times.len());
        let mut frame = 0;
        let mut failure = None;
        let events = simulate(
            eta0,
            rates,
            k,
            cfg.t_end,
            times,
            replica_seed(base, 2 * r as u64 + 1),
            |_, st| {
                let eta = st.configuration();
                match empirical_measure(eta, block) {
                    Ok(e) => densities.push(e.densities),
                    Err(e) => failure = Some(e),
                }
                let occupied: Vec<usize> = (0..sites).filter(|&x| eta.get(x)).collect();
                let mut sup = 0.0f64;
                for (j, phi) in phi_table.iter().enumerate() {
                    let pairing = occupied.iter().map(|&x| phi[x]).sum::<f64>() / sites as f64;
                    if j == 0 {
                        mass.push(pairing);
                    }
                    sup = sup.max((pairing - targets[frame][j]).abs());
                }
                deviation.push(sup);
                frame += 1;
            },
        )?;
        if let Some(e) = failure {
            return Err(e.into());
        }
        Ok(Replica {
            densities,
            deviation,
            mass,
            events,
        })
    })?;

    let count = replicas.len() as f64;
    let mean_density = (0..times.len())
        .map(|j| {
            let mut acc = vec![0.0; replicas[0].densities[j].len()];
            for r in &replicas {
                for (a, d) in acc.iter_mut().zip(&r.densities[j]) {
                    *a += d;
                }
            }
            acc.into_iter().map(|a| a / count).collect()
        })
        .collect();
    Ok(HydroRun {
        n,
        k,
        block,
        times: times.to_vec(),
        mean_density,
        deviation: (0..times.len())
            .map(|j| replicas.iter().map(|r| r.deviation[j]).collect())
            .collect(),
        mass: (0..times.len())
            .map(|j| replicas.iter().map(|r| r.mass[j]).collect())
            .collect(),
        targets: targets.to_vec(),
        events: replicas.iter().map(|r| r.events).collect(),
    })
}

/// Block side giving the configured number of blocks per side at size `n`.
pub fn block_for(cfg: &ExperimentConfig, n: usize) -> Result<usize> {
    let per_side = cfg.geometry.n / cfg.block.max(1);
    if cfg.block == 0
        || !cfg.geometry.n.is_multiple_of(cfg.block)
        || per_side == 0
        || !n.is_multiple_of(per_side)
    {
        return config_error(format!(
            "N = {n} is not a multiple of the {per_side} blocks per side set by block = {} at N = {}",
            cfg.block, cfg.geometry.n
        ));
    }
    Ok(n / per_side)
}

/// Front speed from density frames. 1D: both fronts tracked from their initial crossings. 2D: radius of the
/// disk with the area of the `alpha_*` superlevel set.
pub(crate) fn measure_speed(
    times: &[f64],
    frames: &[Vec<f64>],
    positions: &[f64],
    front0: &FrontState,
    level: f64,
    window: (f64, f64),
) -> Result<SpeedEstimate> {
    if front0.dim() == 1 {
        let crossings = front0.crossings();
        return Ok(tracked_front_speed(
            times, frames, positions, level, &crossings, window,
        )?);
    }
    let (ts, rs): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(frames)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(&t, d)| {
            let area = d.iter().filter(|&&v| v > level).count() as f64 / d.len() as f64;
            (t, (area / PI).sqrt())
        })
        .unzip();
    if ts.len() < 3 {
        return config_error("fewer than three frames in the speed window");
    }
    let fit = linear_fit(&ts, &rs);
    Ok(SpeedEstimate {
        speed: fit.slope,
        half_width: t_quantile(0.95, (ts.len() - 2) as f64) * fit.slope_se,
        intercept: fit.intercept,
        frames: ts.len(),
    })
}

pub(crate) fn nearest_index(times: &[f64], t: f64) -> usize {
    (0..times.len())
        .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
        .unwrap_or(0)
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

pub(crate) fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
