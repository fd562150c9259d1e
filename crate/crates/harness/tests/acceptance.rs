//! Acceptance criteria, one `PASS`/`FAIL` line each.
//!
//! The binary exits with success only when the failing criteria are
//! exactly [`EXPECTED_FAILURES`], the ones analysed in the README, so a
//! regression and an unexpected pass are both reported.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gk_core::front::{first_topology_change, front_speed, Orientation};
use gk_core::kmc::rng_for;
use gk_core::lattice::TorusGeometry;
use gk_core::rates::{derived_constants, ReactionPolynomial};
use gk_core::rd::{
    check_comparison, generation_check, solve_pe, solve_pnk, ContinuumField, GenerationScale,
    LatticeField,
};
use gk_core::wave::{solve_wave, verify_tails, wave_speed, WaveOptions, WaveProfile};
use gk_harness::certify::{run_certificates, Certificate};
use gk_harness::config::ExperimentConfig;
use gk_harness::hydro::run_hydrodynamic;
use gk_harness::oracle::run_oracle;
use gk_harness::pool::worker_count;
use rand::Rng;

const EXPECTED_FAILURES: &[u32] = &[5, 10];

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ExperimentConfig::load(&path, &[]).expect("shipped configuration loads")
}

fn default_model() -> ReactionPolynomial {
    ReactionPolynomial::default_model(200.0).expect("default model")
}

fn default_wave(f: &ReactionPolynomial) -> WaveProfile {
    let o = WaveOptions::automatic(f).expect("wave options");
    solve_wave(f, o.z_max, o.h, o.tol).expect("wave")
}

/// Speed of `s (u - a)(b - u)(u - m)` from the Nagumo reduction.
fn nagumo_speed(s: f64, a: f64, m: f64, b: f64) -> f64 {
    (s / 2.0).sqrt() * (a + b - 2.0 * m)
}

fn wave_speed_oracle() -> Outcome {
    let start = Instant::now();
    let family = [
        (200.0, 0.25, 0.45, 0.75),
        (1.0, 0.0, 0.25, 1.0),
        (3.0, 0.1, 0.3, 0.9),
        (0.5, 0.2, 0.6, 0.7),
        (50.0, 0.3, 0.42, 0.8),
    ];
    let mut worst = 0.0f64;
    for (s, a, m, b) in family {
        let f = ReactionPolynomial::cubic(s, a, m, b).expect("cubic");
        let c = wave_speed(&f).expect("speed");
        worst = worst.max((c - nagumo_speed(s, a, m, b)).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-6 && elapsed < Duration::from_secs(10),
        format!("max |dc| = {worst:.2e} over 5 cubics in {elapsed:.2?}"),
    )
}

fn speed_sign_law() -> Outcome {
    let mut mismatches = 0;
    let mut at_balance = f64::NAN;
    for i in 0..9 {
        let m = 0.3 + 0.05 * i as f64;
        let f = ReactionPolynomial::cubic(200.0, 0.25, m, 0.75).expect("cubic");
        let c = wave_speed(&f).expect("speed");
        let area = f.integral();
        let sign = |v: f64, tol: f64| {
            if v.abs() <= tol {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        };
        if sign(c, 1e-6) != sign(area, 1e-12) {
            mismatches += 1;
        }
        if i == 4 {
            at_balance = c;
        }
    }
    outcome(
        mismatches == 0 && at_balance.abs() < 1e-6,
        format!("{mismatches} sign mismatches over 9 roots, c_* = {at_balance:.2e} at balance"),
    )
}

fn tail_rates() -> Outcome {
    let w = default_wave(&default_model());
    let t = verify_tails(&w);
    let el = ((t.rate_left_fit - t.rate_left_theory) / t.rate_left_theory).abs();
    let er = ((t.rate_right_fit - t.rate_right_theory) / t.rate_right_theory).abs();
    outcome(
        el < 0.05 && er < 0.05 && t.passed,
        format!("relative rate errors {el:.2e} (alpha_+ side), {er:.2e} (alpha_- side)"),
    )
}

fn pde_front_speeds() -> Outcome {
    let f = default_model();
    let w = default_wave(&f);
    let cfg = ExperimentConfig::default();
    let profile = cfg.initial.prepare(1, 4000, f.alpha_star).expect("profile");
    let front0 = profile.front().expect("front").clone();
    let t_max = 0.8 * first_topology_change(&front0, w.c_star, 10.0, 0).expect("topology change");
    let gamma = derived_constants(&f, 0.2, 0.8).expect("constants").gamma;
    let times: Vec<f64> = (0..=60).map(|i| t_max * i as f64 / 60.0).collect();

    let start = Instant::now();
    let (eps, m) = (0.01, 4000);
    let u0 = ContinuumField::from_fn(1, m, |v| profile.eval(v));
    let tr = solve_pe(&u0, &f, eps, t_max, &times).expect("continuum solve");
    let pos: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let window = (2.0 * GenerationScale::Continuum { eps }.time(gamma), t_max);
    let pe = front_speed(
        &tr.times,
        &tr.frames,
        &pos,
        f.alpha_star,
        Orientation::Down,
        window,
    )
    .expect("speed");
    let pe_time = start.elapsed();
    let pe_err = (pe.speed - w.c_star).abs() / w.c_star;

    let start = Instant::now();
    let (n, k) = (512, 25.0);
    let u0 = LatticeField::from_fn(TorusGeometry::new(1, n).expect("ring"), |v| profile.eval(v));
    let tr = solve_pnk(&u0, &f, k, t_max, &times).expect("lattice solve");
    let pos: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let window = (2.0 * GenerationScale::Lattice { k }.time(gamma), t_max);
    let pnk = front_speed(
        &tr.times,
        &tr.frames,
        &pos,
        f.alpha_star,
        Orientation::Down,
        window,
    )
    .expect("speed");
    let pnk_time = start.elapsed();
    let pnk_err = (pnk.speed - w.c_star).abs() / w.c_star;

    let limit = Duration::from_secs(120);
    outcome(
        pe_err < 0.02 && pnk_err < 0.05 && pe_time < limit && pnk_time < limit,
        format!(
            "continuum eps = 0.01: {:.4} (error {:.2}%, {pe_time:.1?}); lattice N = 512, K = 25: {:.4} (error {:.2}%, {pnk_time:.1?})",
            pe.speed,
            100.0 * pe_err,
            pnk.speed,
            100.0 * pnk_err
        ),
    )
}

fn generation() -> Outcome {
    let f = default_model();
    let cfg = ExperimentConfig::default();
    let profile = cfg.initial.prepare(1, 2048, f.alpha_star).expect("profile");
    let u0 = ContinuumField::from_fn(1, 2048, |v| profile.eval(v));
    let constants = derived_constants(&f, 0.2, 0.8).expect("constants");
    let mut m0 = Vec::new();
    let mut clauses_at_002 = false;
    for eps in [0.04, 0.02, 0.01] {
        let scale = GenerationScale::Continuum { eps };
        let tg = scale.time(constants.gamma);
        let tr = solve_pe(&u0, &f, eps, tg, &[tg]).expect("continuum solve");
        let r = generation_check(&u0.values, tr.last(), &f, &constants, scale, 0.05, None)
            .expect("check");
        if eps == 0.02 {
            clauses_at_002 = r.bounds_hold && r.smallest_m0.is_finite();
        }
        m0.push(r.smallest_m0);
    }
    let non_increasing = m0.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        clauses_at_002 && non_increasing,
        format!(
            "clauses at eps = 0.02: {clauses_at_002}; smallest M0 at eps = 0.04, 0.02, 0.01: {:.3}, {:.3}, {:.3} (non-increasing: {non_increasing})",
            m0[0], m0[1], m0[2]
        ),
    )
}

fn residual_certificate(cert: &Certificate) -> Outcome {
    let value = |name: &str| cert.entry(name).and_then(|e| e.value).unwrap_or(f64::NAN);
    let names = [
        "residual_upper_coarse",
        "residual_lower_coarse",
        "residual_upper_fine",
        "residual_lower_fine",
        "residual_refinement",
        "residual_discretisation",
    ];
    let all = names
        .iter()
        .all(|n| cert.entry(n).is_some_and(|e| e.passed));
    let (up, lo) = (value("residual_upper_fine"), value("residual_lower_fine"));
    outcome(
        all && up >= 0.5 && lo <= -0.5,
        format!(
            "min L u+ = {up:.3}, max L u- = {lo:.3} on the fine grid; coarse {:.3} / {:.3}; capped margin gain {:.3}",
            value("residual_upper_coarse"),
            value("residual_lower_coarse"),
            value("residual_refinement")
        ),
    )
}

fn sandwich(cert: &Certificate) -> Outcome {
    let e = cert.entry("sandwich").expect("sandwich entry");
    outcome(
        e.passed,
        format!(
            "smallest margin {:.4}; {}",
            e.value.unwrap_or(f64::NAN),
            e.detail
        ),
    )
}

fn comparison_principle() -> Outcome {
    let f = default_model();
    let g = TorusGeometry::new(1, 64).expect("ring");
    let mut rng = rng_for(20_240_601);
    let times: Vec<f64> = (1..=10).map(|i| 0.01 * i as f64).collect();
    let (mut unordered, mut escaped) = (0, 0);
    for _ in 0..100 {
        let a: Vec<f64> = (0..64).map(|_| rng.random_range(0.02..0.95)).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|v| (v + rng.random_range(0.0..0.05)).min(0.99))
            .collect();
        let lo = a.iter().copied().fold(f.alpha_minus, f64::min);
        let hi = b.iter().copied().fold(f.alpha_plus, f64::max);
        let sa = solve_pnk(
            &LatticeField::new(g, a).expect("field"),
            &f,
            25.0,
            0.1,
            &times,
        )
        .expect("solve");
        let sb = solve_pnk(
            &LatticeField::new(g, b).expect("field"),
            &f,
            25.0,
            0.1,
            &times,
        )
        .expect("solve");
        let r = check_comparison(&sa.times, &sa.frames, &sb.frames, 1e-9).expect("comparison");
        if !r.ordered {
            unordered += 1;
        }
        let inside = |frames: &[Vec<f64>]| {
            frames
                .iter()
                .flatten()
                .all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9)
        };
        if !inside(&sa.frames) || !inside(&sb.frames) {
            escaped += 1;
        }
    }
    outcome(
        unordered == 0 && escaped == 0,
        format!("100 pairs: {unordered} lost their order, {escaped} left the invariant interval"),
    )
}

fn exact_oracle() -> Outcome {
    let start = Instant::now();
    let r = run_oracle(&config("oracle.toml"), worker_count().expect("workers")).expect("oracle");
    let elapsed = start.elapsed();
    let p: Vec<String> = r
        .times
        .iter()
        .map(|t| format!("p = {:.3} at t = {}", t.p_value, t.t))
        .collect();
    outcome(
        r.passed && elapsed < Duration::from_secs(60),
        format!(
            "{} with {} replicas in {elapsed:.1?}",
            p.join(", "),
            r.replicas
        ),
    )
}

fn hydrodynamic_run() -> Outcome {
    let start = Instant::now();
    let workers = worker_count().expect("workers");
    let r = run_hydrodynamic(&config("hydro.toml"), workers).expect("hydro run");
    let elapsed = start.elapsed();
    let speed = match (&r.speed, &r.speed_relative_error) {
        (Some(s), Some(e)) => format!(
            "speed {:.3} +- {:.3} (relative error {:.1}%)",
            s.speed,
            s.half_width,
            100.0 * e
        ),
        _ => format!(
            "speed unavailable ({})",
            r.speed_error.as_deref().unwrap_or("")
        ),
    };
    let dev: Vec<String> = r
        .deviation_at_match
        .iter()
        .map(|d| format!("{d:.4}"))
        .collect();
    outcome(
        r.speed_passed && r.deviation_decreasing && elapsed < Duration::from_secs(600),
        format!(
            "{speed}; deviation at t = {} for N = 500, 1000, 2000: {} (decreasing: {}); {elapsed:.0?} on {workers} worker(s)",
            r.match_time,
            dev.join(", "),
            r.deviation_decreasing
        ),
    )
}

fn consistency(cert: &Certificate) -> Outcome {
    let e = cert.entry("consistency").expect("consistency entry");
    outcome(
        e.passed,
        format!(
            "spread {:.4} < 1.2; {}",
            e.value.unwrap_or(f64::NAN),
            e.detail
        ),
    )
}

fn determinism(first: &Certificate) -> Outcome {
    let a = first.to_json().expect("json");
    let b = run_certificates(&config("certify.toml"))
        .expect("certificate")
        .to_json()
        .expect("json");
    outcome(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let cert = run_certificates(&config("certify.toml")).expect("certificate chain runs");
    let criteria: Vec<Criterion> = vec![
        (1, "wave-speed oracle", Box::new(wave_speed_oracle)),
        (2, "speed-sign law", Box::new(speed_sign_law)),
        (3, "tail rates", Box::new(tail_rates)),
        (4, "PDE front speed", Box::new(pde_front_speeds)),
        (5, "generation", Box::new(generation)),
        (
            6,
            "residual certificates",
            Box::new(|| residual_certificate(&cert)),
        ),
        (7, "sandwich", Box::new(|| sandwich(&cert))),
        (8, "comparison principle", Box::new(comparison_principle)),
        (9, "exact-oracle agreement", Box::new(exact_oracle)),
        (10, "hydrodynamic run", Box::new(hydrodynamic_run)),
        (11, "consistency bound", Box::new(|| consistency(&cert))),
        (12, "determinism", Box::new(|| determinism(&cert))),
    ];
    let mut failed = Vec::new();
    for (id, title, run) in &criteria {
        let o = run();
        println!(
            "{} criterion {id:>2} {title}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.passed {
            failed.push(*id);
        }
    }
    println!(
        "{} of {} criteria pass; failing: {failed:?}; expected failures: {EXPECTED_FAILURES:?}",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if failed == EXPECTED_FAILURES {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
