//! Pre-flight checks of a configuration with measured margins.
//!
//! Every check reports the measured value, the bound it is compared with
//! and the signed margin (positive when the check passes), so a failing
//! configuration says how far off it is.

use gk_core::front::crossings_1d;
use gk_core::rates::validate_bistable_unbalanced;
use serde::{Deserialize, Serialize};

use crate::config::{Control, ExperimentConfig, PreparedProfile};

/// Smallest admissible `|u0'|` (per unit length) at an `alpha_*` crossing.
pub const MIN_CROSSING_SLOPE: f64 = 1e-2;

/// Sampling resolution of `u0` for the range and slope checks.
const SAMPLES_1D: usize = 8192;
const SAMPLES_2D: usize = 256;

/// Which experiment the configuration is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Hydro,
    Kmc,
    Ladder,
    Certify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigReport {
    pub checks: Vec<ConfigCheck>,
}

impl ConfigReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ConfigCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One line per failed check.
    pub fn failures(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| {
                format!(
                    "{}: {} (value {}, bound {}, margin {})",
                    c.name, c.message, c.value, c.bound, c.margin
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn push(
        &mut self,
        name: &str,
        passed: bool,
        value: f64,
        bound: f64,
        margin: f64,
        message: impl Into<String>,
    ) {
        self.checks.push(ConfigCheck {
            name: name.into(),
            passed,
            value,
            bound,
            margin,
            message: message.into(),
        });
    }
}

/// Runs all checks relevant to `selection`. Checks that cannot be evaluated
/// because an earlier one failed (for instance no model) are skipped.
pub fn validate_config(cfg: &ExperimentConfig, selection: Selection) -> ConfigReport {
    let mut report = ConfigReport::default();
    let g = cfg.geometry;
    let geometry_ok = (g.dim == 1 || g.dim == 2) && g.n >= 2;
    report.push(
        "geometry",
        geometry_ok,
        g.n as f64,
        2.0,
        g.n as f64 - 2.0,
        format!(
            "need d in {{1, 2}} and N >= 2, got d = {}, N = {}",
            g.dim, g.n
        ),
    );
    if !geometry_ok {
        return report;
    }
    let times_ok = cfg.t_end > 0.0 && cfg.frames >= 1 && cfg.replicas >= 1;
    report.push(
        "run_length",
        times_ok,
        cfg.t_end,
        0.0,
        cfg.t_end,
        "t_end, frames and replicas must be positive",
    );
    let (f, rates) = match cfg.model.build(g.dim) {
        Ok(m) => m,
        Err(e) => {
            report.push(
                "model",
                false,
                f64::NAN,
                0.0,
                f64::NAN,
                format!("cannot build the model: {e}"),
            );
            return report;
        }
    };
    report.push(
        "rates_nonnegative",
        true,
        rates.max_rate(),
        0.0,
        rates.table().iter().copied().fold(f64::INFINITY, f64::min),
        "rate table entries are nonnegative",
    );
    model_checks(&mut report, cfg, &f);
    match cfg.initial.prepare(g.dim, g.n, f.alpha_star) {
        Ok(p) => initial_checks(&mut report, &p, f.alpha_star),
        Err(e) => report.push(
            "initial_profile",
            false,
            f64::NAN,
            0.0,
            f64::NAN,
            e.to_string(),
        ),
    }
    if matches!(selection, Selection::Hydro | Selection::Kmc) {
        let sizes = if cfg.hydro.sizes.is_empty() {
            vec![g.n]
        } else {
            cfg.hydro.sizes.clone()
        };
        for &n in &sizes {
            let blocks = crate::hydro::block_for(cfg, n);
            report.push(
                &format!("blocks_n{n}"),
                blocks.is_ok(),
                cfg.block as f64,
                n as f64,
                if blocks.is_ok() { 0.0 } else { -1.0 },
                blocks
                    .err()
                    .map_or_else(|| "block size divides N".to_string(), |e| e.to_string()),
            );
        }
        if selection == Selection::Hydro {
            for &n in &sizes {
                schedule_check(&mut report, cfg, n);
            }
        }
    }
    report
}

fn model_checks(
    report: &mut ConfigReport,
    cfg: &ExperimentConfig,
    f: &gk_core::rates::ReactionPolynomial,
) {
    let v = validate_bistable_unbalanced(&f.polynomial(), false);
    let slopes = v
        .derivative_at_roots
        .iter()
        .map(|d| d.abs())
        .fold(f64::INFINITY, f64::min);
    report.push(
        "bistable",
        v.bistable(),
        slopes,
        0.0,
        if v.bistable() { slopes } else { -slopes },
        format!(
            "f needs three roots in (0, 1) with alternating slopes: {}",
            v.summary()
        ),
    );
    let integral = v.integral.unwrap_or(f64::NAN);
    if cfg.control == Control::Balanced {
        let ok = integral.abs() < 1e-12;
        report.push(
            "balanced",
            ok,
            integral,
            0.0,
            1e-12 - integral.abs(),
            "balanced control requires int f = 0 between the stable roots",
        );
    } else {
        let ok = integral.is_finite() && integral.abs() > 0.0;
        report.push(
            "unbalanced",
            ok,
            integral,
            0.0,
            integral.abs(),
            "int f over [alpha_-, alpha_+] must be nonzero (or select the balanced control)",
        );
    }
}

fn initial_checks(report: &mut ConfigReport, p: &PreparedProfile, alpha_star: f64) {
    let dim = p.dim();
    let side = if dim == 1 { SAMPLES_1D } else { SAMPLES_2D };
    let h = 1.0 / side as f64;
    let u = p.sample(side, 0.0);
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = lo.min(alpha_star - lo).min(hi - alpha_star).min(1.0 - hi);
    report.push(
        "initial_range",
        margin > 0.0,
        lo,
        alpha_star,
        margin,
        format!("need 0 < min u0 < alpha_* < max u0 < 1, got min u0 = {lo}, max u0 = {hi}, alpha_* = {alpha_star}"),
    );
    if margin <= 0.0 {
        return;
    }
    let slope = if dim == 1 {
        let pos: Vec<f64> = (0..side).map(|i| i as f64 * h).collect();
        let cs = crossings_1d(&u, &pos, alpha_star);
        if cs.is_empty() {
            f64::NAN
        } else {
            cs.iter()
                .map(|&(x, _)| ((p.eval(&[x + h]) - p.eval(&[x - h])) / (2.0 * h)).abs())
                .fold(f64::INFINITY, f64::min)
        }
    } else {
        min_crossing_gradient_2d(&u, side, alpha_star)
    };
    let ok = slope.is_finite() && slope >= MIN_CROSSING_SLOPE;
    report.push(
        "transversal_crossing",
        ok,
        slope,
        MIN_CROSSING_SLOPE,
        if slope.is_finite() {
            slope - MIN_CROSSING_SLOPE
        } else {
            -MIN_CROSSING_SLOPE
        },
        "the alpha_* level set of u0 must be a transversal crossing (|grad u0 . n| bounded below)",
    );
}

/// Smallest gradient magnitude over grid edges crossed by the level set.
fn min_crossing_gradient_2d(u: &[f64], side: usize, level: f64) -> f64 {
    let h = 1.0 / side as f64;
    let at = |i: usize, j: usize| u[(i % side) * side + (j % side)];
    let grad = |i: usize, j: usize| {
        let gx = (at(i + 1, j) - at(i + side - 1, j)) / (2.0 * h);
        let gy = (at(i, j + 1) - at(i, j + side - 1)) / (2.0 * h);
        (gx * gx + gy * gy).sqrt()
    };
    let mut best = f64::INFINITY;
    let mut found = false;
    for i in 0..side {
        for j in 0..side {
            let a = at(i, j) - level;
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                let b = at(ni, nj) - level;
                if (a > 0.0) != (b > 0.0) {
                    found = true;
                    best = best.min(0.5 * (grad(i, j) + grad(ni, nj)));
                }
            }
        }
    }
    if found {
        best
    } else {
        f64::NAN
    }
}

fn schedule_check(report: &mut ConfigReport, cfg: &ExperimentConfig, n: usize) {
    let k = cfg.k_at(n);
    let bound = cfg.schedule_delta * (n as f64).ln().sqrt();
    report.push(
        &format!("k_schedule_n{n}"),
        k > 1.0 && k <= bound,
        k,
        bound,
        bound - k,
        format!(
            "need 1 < K <= delta sqrt(log N) = {} sqrt(log {n}) = {bound:.4}, got K = {k}",
            cfg.schedule_delta
        ),
    );
}
