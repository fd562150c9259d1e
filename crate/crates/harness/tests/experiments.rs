use std::path::PathBuf;

use gk_harness::config::ExperimentConfig;
use gk_harness::hydro::{run_hydrodynamic, run_kmc, test_functions};
use gk_harness::ladder::run_pde_ladder;
use gk_harness::HarnessError;

fn load(name: &str, overrides: &[&str]) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::load(&path, &overrides).unwrap()
}

#[test]
fn ladder_agreement_grows_and_speed_error_shrinks() {
    let r = run_pde_ladder(&load("ladder.toml", &[])).unwrap();
    let finals: Vec<f64> = r.rungs.iter().map(|g| g.final_agreement()).collect();
    let errors: Vec<f64> = r.rungs.iter().map(|g| g.speed_error.unwrap()).collect();
    assert!(
        r.agreement_monotone && r.speed_error_decreasing && r.passed,
        "{finals:?} {errors:?}"
    );
    assert!(*finals.last().unwrap() > 0.99, "{finals:?}");
    // the excluded neighbourhood shrinks along the ladder
    let excluded: Vec<f64> = r
        .rungs
        .iter()
        .map(|g| *g.excluded.last().unwrap())
        .collect();
    assert!(excluded.windows(2).all(|w| w[1] < w[0]), "{excluded:?}");
    assert!(r.rungs.iter().all(|g| g.speed.unwrap().speed > 0.0));
}

#[test]
fn balanced_front_stays_at_rest() {
    let r = run_pde_ladder(&load("ladder_balanced.toml", &[])).unwrap();
    assert_eq!(r.reference_speed, 0.0);
    for g in &r.rungs {
        let s = g.speed.unwrap();
        assert!(s.speed.abs() < 1e-9, "N = {}: {s:?}", g.n);
    }
    assert!(r.passed);
}

#[test]
fn ladder_refuses_invalid_configurations() {
    let cfg = load(
        "ladder.toml",
        &["initial={\"kind\":\"constant\",\"value\":0.5}"],
    );
    assert!(matches!(
        run_pde_ladder(&cfg),
        Err(HarnessError::Validation(_))
    ));
}

#[test]
fn pure_stirring_does_not_move_the_front() {
    let r = run_kmc(&load("glauber_off.toml", &[]), 1).unwrap();
    assert_eq!(r.reference_speed, 0.0);
    let s = r.speed.unwrap();
    assert!(s.contains(0.0), "{s:?}");
    assert!(r.speed_passed);
    // particle number is conserved replica by replica
    let run = &r.runs[0];
    for frame in &run.mass {
        for (a, b) in frame.iter().zip(&run.mass[0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn particle_runs_are_reproducible_and_worker_independent() {
    let cfg = ExperimentConfig::default()
        .with_overrides(&[
            "replicas=4".into(),
            "geometry.n=256".into(),
            "t_end=0.02".into(),
            "frames=4".into(),
        ])
        .unwrap();
    let a = run_kmc(&cfg, 1).unwrap();
    let b = run_kmc(&cfg, 3).unwrap();
    assert_eq!(a, b);
    let c = run_kmc(&cfg.with_overrides(&["seed=1".into()]).unwrap(), 1).unwrap();
    assert_ne!(a.runs[0].mean_density, c.runs[0].mean_density);
}

#[test]
fn deviation_sweep_covers_every_size() {
    let cfg = load(
        "hydro.toml",
        &[
            "replicas=2",
            "t_end=0.02",
            "frames=4",
            "hydro.match_time=0.02",
            "hydro.sizes=[500,1000]",
            "geometry.n=1000",
        ],
    );
    let r = run_hydrodynamic(&cfg, 1).unwrap();
    assert_eq!(r.runs.iter().map(|x| x.n).collect::<Vec<_>>(), [500, 1000]);
    assert_eq!(r.deviation_at_match.len(), 2);
    let modes = test_functions(1).len();
    for run in &r.runs {
        assert_eq!(run.times.len(), 5);
        assert_eq!(run.deviation[0].len(), 2);
        assert_eq!(run.block_centres().len(), run.mean_density[0].len());
        assert_eq!(run.targets.len(), run.times.len());
        assert!(run.targets.iter().all(|t| t.len() == modes));
    }
}

#[test]
fn mass_fluctuations_shrink_like_inverse_root_n() {
    let cfg = load(
        "hydro.toml",
        &[
            "replicas=100",
            "t_end=0.001",
            "frames=1",
            "hydro.match_time=0.001",
        ],
    );
    let r = run_hydrodynamic(&cfg, 1).unwrap();
    // product measure with density u0: sd of the mass is sqrt(<u0 (1 - u0)> / N)
    let scaled: Vec<f64> = r
        .runs
        .iter()
        .map(|run| run.mass_spread(0) * (run.n as f64).sqrt())
        .collect();
    let u0 = cfg
        .initial
        .prepare(1, 20_000, 0.45)
        .unwrap()
        .sample(20_000, 0.0);
    let expected = (u0.iter().map(|u| u * (1.0 - u)).sum::<f64>() / u0.len() as f64).sqrt();
    for s in &scaled {
        assert!((s / expected - 1.0).abs() < 0.3, "{scaled:?} vs {expected}");
    }
}
