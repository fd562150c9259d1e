//! The deterministic certificate chain in one dimension.
//!
//! Wave solve, choice of `T`, `d0` and `sigma`, generation of the continuum
//! problem, search for the shift `L`, residual checks of the sub and super
//! solutions on a coarse and a refined grid, the sandwich of the lattice
//! solution on `[t^N, T]` and the consistency constant across lattice sizes.
//! Each step becomes one entry carrying its value, tolerance and margin;
//! the margin is positive exactly when the entry passes. Nothing in the
//! certificate depends on the clock or the machine, so repeated runs give
//! byte-identical JSON.

use gk_core::front::{
    build_sub_super, compare_residuals_1d, consistency_constant_1d, estimate_m1,
    first_topology_change, search_l, select_d0, select_sigma, Cutoff, FrontState, Grid,
    ResidualComparison, SubSuperParams,
};
use gk_core::lattice::TorusGeometry;
use gk_core::rates::{derived_constants, DerivedConstants, ReactionPolynomial};
use gk_core::rd::{
    check_comparison, generation_check, solve_pe, solve_pnk, ContinuumField, GenerationScale,
    LatticeField,
};
use gk_core::wave::{sigma_bound, solve_wave, verify_tails, WaveOptions, WaveProfile};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, PreparedProfile};
use crate::error::{config_error, HarnessError, Result};
use crate::validate::{validate_config, Selection};

/// Relative tolerance of the fitted tail rates.
pub const TAIL_TOLERANCE: f64 = 0.05;

/// Upper limit of the topology-change search.
const TOPOLOGY_SEARCH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub name: String,
    /// `None` when the quantity could not be computed.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub margin: Option<f64>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub passed: bool,
    pub entries: Vec<CertificateEntry>,
}

impl Certificate {
    pub fn entry(&self, name: &str) -> Option<&CertificateEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

struct Builder {
    entries: Vec<CertificateEntry>,
}

impl Builder {
    /// An entry passing when `margin > 0` (or `>= 0` with `inclusive`).
    fn margin(
        &mut self,
        name: &str,
        value: f64,
        tolerance: f64,
        margin: f64,
        inclusive: bool,
        detail: String,
    ) {
        let passed = if inclusive {
            margin >= 0.0
        } else {
            margin > 0.0
        };
        self.entries.push(CertificateEntry {
            name: name.into(),
            value: finite(value),
            tolerance: finite(tolerance),
            margin: finite(margin),
            passed: passed && margin.is_finite(),
            detail,
        });
    }

    fn failed(&mut self, name: &str, tolerance: f64, detail: String) {
        self.entries.push(CertificateEntry {
            name: name.into(),
            value: None,
            tolerance: finite(tolerance),
            margin: None,
            passed: false,
            detail,
        });
    }
}

/// Everything the chain derives before the checks.
struct Setup {
    f: ReactionPolynomial,
    wave: WaveProfile,
    constants: DerivedConstants,
    profile: PreparedProfile,
    front0: FrontState,
    t_max: f64,
    d0: f64,
    sigma: f64,
}

pub fn run_certificates(cfg: &ExperimentConfig) -> Result<Certificate> {
    let report = validate_config(cfg, Selection::Certify);
    if !report.passed() {
        return Err(HarnessError::Validation(report.failures()));
    }
    if cfg.geometry.dim != 1 {
        return config_error("the certificate chain is implemented in one dimension");
    }
    let c = &cfg.certify;
    let mut b = Builder {
        entries: Vec::new(),
    };
    let (f, _) = cfg.model.build(1)?;
    let opts = WaveOptions::automatic(&f)?;
    let wave = solve_wave(&f, opts.z_max, opts.h, opts.tol)?;

    let tails = verify_tails(&wave);
    let tail_error = ((tails.rate_left_fit - tails.rate_left_theory) / tails.rate_left_theory)
        .abs()
        .max(((tails.rate_right_fit - tails.rate_right_theory) / tails.rate_right_theory).abs());
    b.entries.push(CertificateEntry {
        name: "wave_tails".into(),
        value: finite(tail_error),
        tolerance: Some(TAIL_TOLERANCE),
        margin: finite(TAIL_TOLERANCE - tail_error),
        passed: tails.passed,
        detail: "largest relative error of the fitted tail rates; the fit residuals, the sign of U' and the \
                 exponential bound on U' are part of the check"
            .into(),
    });
    let signed = wave.c_star * f.integral().signum();
    b.margin(
        "wave_speed_sign",
        signed,
        0.0,
        signed,
        false,
        format!("c_* sign(int f) with c_* = {}", wave.c_star),
    );

    let profile = cfg.initial.prepare(1, c.grid, f.alpha_star)?;
    let Some(front0) = profile.front().cloned() else {
        return config_error("the certificate chain needs an initial profile with a front");
    };
    let u0_cells = profile.sample(c.grid, 0.5);
    let lo = u0_cells.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u0_cells.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let constants = derived_constants(&f, lo, hi)?;

    let topology = first_topology_change(&front0, wave.c_star, TOPOLOGY_SEARCH, 0);
    let t_max = topology.map_or(cfg.t_end, |t| c.horizon_fraction * t);
    b.margin(
        "horizon",
        t_max,
        topology.unwrap_or(f64::INFINITY),
        topology.map_or(f64::INFINITY, |t| t - t_max),
        false,
        "T against the first topology change of the evolving front".into(),
    );
    let d0 = select_d0(&front0, wave.c_star, t_max)?;
    let sigma_max = sigma_bound(&wave, constants.beta);
    let sigma = match c.sigma_factor {
        Some(factor) => factor * sigma_max,
        None => select_sigma(sigma_max, &f),
    };
    b.margin(
        "residual_sigma_admissible",
        sigma,
        sigma_max,
        sigma_max - sigma,
        false,
        "sigma against the largest sigma with U' <= -sigma (beta + f'(U))".into(),
    );
    let s = Setup {
        f,
        wave,
        constants,
        profile,
        front0,
        t_max,
        d0,
        sigma,
    };
    continuum_checks(cfg, &s, &mut b)?;
    lattice_checks(cfg, &s, &mut b)?;
    let passed = b.entries.iter().all(|e| e.passed);
    Ok(Certificate {
        name: cfg.name.clone(),
        passed,
        entries: b.entries,
    })
}

fn params_for(s: &Setup, eps: f64, l: f64) -> SubSuperParams {
    SubSuperParams {
        sigma: s.sigma,
        l,
        beta: s.constants.beta,
        c_delta_d: Cutoff { d0: s.d0 }.max_second_derivative(),
        d0: s.d0,
        eps,
        t_max: s.t_max,
    }
}

/// `L` for the generated profile, with a margin entry; falls back to
/// `L = 1` so the later checks still report numbers.
fn shift_entry(
    name: &str,
    s: &Setup,
    params: SubSuperParams,
    u_gen: &[f64],
    grid: Grid,
    b: &mut Builder,
) -> Result<f64> {
    let m1 = estimate_m1(
        u_gen,
        &s.front0.sample(grid)?,
        params.eps,
        s.f.alpha_minus + s.sigma * s.constants.beta,
    );
    match search_l(&params, &s.wave, &s.front0, u_gen, grid, m1) {
        Ok(l) => {
            let ss = build_sub_super(
                &SubSuperParams { l, ..params },
                &s.wave,
                &s.front0,
                0.0,
                grid,
            )?;
            let margin = u_gen
                .iter()
                .zip(ss.lower.iter().zip(&ss.upper))
                .map(|(&u, (&lo, &hi))| (u - lo).min(hi - u))
                .fold(f64::INFINITY, f64::min);
            b.margin(
                name,
                l,
                0.0,
                margin,
                true,
                format!("u^-(0) <= u(t_gen) <= u^+(0) with shift L (M1 = {m1})"),
            );
            Ok(l)
        }
        Err(e) => {
            b.failed(name, 0.0, format!("no admissible shift: {e}"));
            Ok(1.0)
        }
    }
}

fn continuum_checks(cfg: &ExperimentConfig, s: &Setup, b: &mut Builder) -> Result<()> {
    let c = &cfg.certify;
    let eps = c.eps;
    let scale = GenerationScale::Continuum { eps };
    let t_gen = scale.time(s.constants.gamma);
    let u0 = ContinuumField::new(1, c.grid, s.profile.sample(c.grid, 0.5))?;
    let traj = solve_pe(&u0, &s.f, eps, t_gen, &[t_gen])?;
    let gen = generation_check(
        &u0.values,
        traj.last(),
        &s.f,
        &s.constants,
        scale,
        c.generation_delta,
        None,
    )?;
    let excess = (s.f.alpha_minus - gen.min_value)
        .max(gen.max_value - s.f.alpha_plus)
        .max(0.0);
    b.margin(
        "generation",
        excess,
        c.generation_delta,
        c.generation_delta - excess,
        true,
        format!(
            "overshoot beyond [alpha_-, alpha_+] at t_gen = {t_gen}; smallest M0 = {}",
            gen.smallest_m0
        ),
    );
    let grid = Grid::cells(1, c.grid);
    let l = shift_entry("shift", s, params_for(s, eps, 1.0), traj.last(), grid, b)?;
    let params = params_for(s, eps, l);

    let times = residual_times(&params, c.residual_times);
    let coarse = compare_residuals_1d(&params, &s.wave, &s.front0, &s.f, grid, &times)?;
    let fine = compare_residuals_1d(
        &params,
        &s.wave,
        &s.front0,
        &s.f,
        Grid::cells(1, 2 * c.grid),
        &times,
    )?;
    for (label, r, m) in [("coarse", &coarse, c.grid), ("fine", &fine, 2 * c.grid)] {
        b.margin(
            &format!("residual_upper_{label}"),
            r.fd.min_upper,
            c.residual_margin,
            r.fd.min_upper - c.residual_margin,
            true,
            format!("min L u^+ on {m} cells over {} times", r.fd.times),
        );
        b.margin(
            &format!("residual_lower_{label}"),
            r.fd.max_lower,
            -c.residual_margin,
            -c.residual_margin - r.fd.max_lower,
            true,
            format!("max L u^- on {m} cells over {} times", r.fd.times),
        );
    }
    let capped = |r: &ResidualComparison| r.fd.min_upper.min(-r.fd.max_lower).min(1.0);
    let gain = capped(&fine) - capped(&coarse);
    b.margin(
        "residual_refinement",
        gain,
        0.0,
        gain,
        true,
        "change of min(1, residual margin) under one refinement".into(),
    );
    let ratio = fine.max_fd_error / coarse.max_fd_error;
    b.margin(
        "residual_discretisation",
        ratio,
        1.0,
        1.0 - ratio,
        false,
        format!(
            "finite-difference residual error ratio fine / coarse ({} / {})",
            fine.max_fd_error, coarse.max_fd_error
        ),
    );
    Ok(())
}

/// Uniform times on `[0, T]` plus a cluster resolving the initial decay of
/// `q` on the scale `eps / beta`.
fn residual_times(params: &SubSuperParams, uniform: usize) -> Vec<f64> {
    let m = uniform.max(2);
    let mut times: Vec<f64> = (0..m)
        .map(|i| params.t_max * i as f64 / (m - 1) as f64)
        .collect();
    let scale = params.eps / params.beta;
    times.extend((1..=100).map(|i| scale * i as f64 / 50.0));
    times.sort_by(f64::total_cmp);
    times
}

fn lattice_checks(cfg: &ExperimentConfig, s: &Setup, b: &mut Builder) -> Result<()> {
    let c = &cfg.certify;
    let (n, k) = (c.sandwich_n, c.sandwich_k);
    let eps = 1.0 / k.sqrt();
    let geometry = TorusGeometry::new(1, n)?;
    let u0 = LatticeField::new(geometry, s.profile.sample(n, 0.0))?;
    let t_n = GenerationScale::Lattice { k }.time(s.constants.gamma);
    let grid = Grid::lattice(1, n);
    if t_n >= s.t_max {
        b.failed(
            "sandwich",
            c.comparison_tolerance,
            format!("t^N = {t_n} is not below T = {}", s.t_max),
        );
        return consistency_entry(cfg, s, params_for(s, eps, 1.0), b);
    }
    let frames = c.sandwich_frames.max(1);
    let times: Vec<f64> = (0..=frames)
        .map(|i| t_n + (s.t_max - t_n) * i as f64 / frames as f64)
        .collect();
    let traj = solve_pnk(&u0, &s.f, k, s.t_max, &times)?;
    let l = shift_entry(
        "lattice_shift",
        s,
        params_for(s, eps, 1.0),
        &traj.frames[0],
        grid,
        b,
    )?;
    let params = params_for(s, eps, l);
    let mut lower = Vec::with_capacity(times.len());
    let mut upper = Vec::with_capacity(times.len());
    for &t in &traj.times {
        let ss = build_sub_super(
            &params,
            &s.wave,
            &s.front0,
            (t - t_n).clamp(0.0, s.t_max),
            grid,
        )?;
        lower.push(ss.lower);
        upper.push(ss.upper);
    }
    let below = check_comparison(&traj.times, &lower, &traj.frames, c.comparison_tolerance)?;
    let above = check_comparison(&traj.times, &traj.frames, &upper, c.comparison_tolerance)?;
    let gap = -below.max_excess.max(above.max_excess);
    b.margin(
        "sandwich",
        gap,
        -c.comparison_tolerance,
        gap + c.comparison_tolerance,
        true,
        format!(
            "min of u^N - u^- and u^+ - u^N over {} frames on [t^N, T] = [{t_n}, {}], N = {n}, K = {k}; {} violations",
            traj.times.len(),
            s.t_max,
            below.violations + above.violations
        ),
    );
    consistency_entry(cfg, s, params, b)
}

fn consistency_entry(
    cfg: &ExperimentConfig,
    s: &Setup,
    params: SubSuperParams,
    b: &mut Builder,
) -> Result<()> {
    let c = &cfg.certify;
    let values: Vec<f64> = c
        .consistency_sizes
        .iter()
        .map(|&n| consistency_constant_1d(&params, &s.wave, &s.front0, n, c.sandwich_k, 0.0))
        .collect::<std::result::Result<_, _>>()?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi / lo;
    b.margin(
        "consistency",
        spread,
        c.consistency_spread,
        c.consistency_spread - spread,
        false,
        format!(
            "max C / min C with C = {values:?} at N = {:?}",
            c.consistency_sizes
        ),
    );
    Ok(())
}
