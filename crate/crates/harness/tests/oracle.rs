use gk_harness::config::ExperimentConfig;
use gk_harness::oracle::{chi_square, run_oracle};

#[test]
fn chi_square_of_a_perfect_fit_is_zero() {
    let (stat, dof) = chi_square(&[25, 25, 50], &[0.25, 0.25, 0.5], 100);
    assert_eq!((stat, dof), (0.0, 2.0));
}

#[test]
fn chi_square_pools_sparse_cells() {
    // expected counts 50, 45, 3, 2: the last two are pooled into one cell
    let (stat, dof) = chi_square(&[40, 50, 6, 4], &[0.5, 0.45, 0.03, 0.02], 100);
    let expected = 100.0 / 50.0 + 25.0 / 45.0 + 25.0 / 5.0;
    assert!((stat - expected).abs() < 1e-12, "{stat}");
    assert_eq!(dof, 2.0);
}

#[test]
fn counts_on_impossible_states_are_infinitely_unlikely() {
    let (stat, _) = chi_square(&[99, 1], &[1.0, 0.0], 100);
    assert!(stat.is_infinite());
}

#[test]
fn small_oracle_run_passes_and_is_reproducible() {
    let cfg = ExperimentConfig::default()
        .with_overrides(&[
            "oracle.replicas=20000".into(),
            "oracle.times=[0.05,0.3]".into(),
        ])
        .unwrap();
    let a = run_oracle(&cfg, 1).unwrap();
    assert!(
        a.passed,
        "{:?}",
        a.times.iter().map(|t| t.p_value).collect::<Vec<_>>()
    );
    for t in &a.times {
        assert_eq!(t.counts.len(), 16);
        assert_eq!(t.counts.iter().sum::<u64>(), 20000);
        assert!((t.exact.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let b = run_oracle(&cfg, 2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn oracle_detects_a_wrong_law() {
    // sampled at K = 4, compared with the exact law at K = 1.5
    let cfg = ExperimentConfig::default()
        .with_overrides(&["oracle.replicas=20000".into(), "oracle.times=[0.1]".into()])
        .unwrap();
    let mc = run_oracle(&cfg, 1).unwrap();
    let slow = run_oracle(&cfg.with_overrides(&["oracle.k=1.5".into()]).unwrap(), 1).unwrap();
    let (stat, _) = chi_square(&mc.times[0].counts, &slow.times[0].exact, 20000);
    assert!(stat > 200.0, "{stat}");
}

#[test]
fn oversized_lattices_are_refused() {
    let cfg = ExperimentConfig::default()
        .with_overrides(&["oracle.n=40".into(), "oracle.initial=[0]".into()])
        .unwrap();
    assert!(run_oracle(&cfg, 1).is_err());
}
