use gk_harness::config::{ExperimentConfig, InitialProfile, KSchedule};
use gk_harness::validate::{validate_config, Selection};

#[test]
fn default_configuration_is_valid_for_every_selection() {
    let cfg = ExperimentConfig::default();
    for sel in [Selection::Kmc, Selection::Ladder, Selection::Certify] {
        let r = validate_config(&cfg, sel);
        assert!(r.passed(), "{sel:?}: {}", r.failures());
    }
}

#[test]
fn constant_initial_data_without_a_front_is_rejected() {
    let cfg = ExperimentConfig {
        initial: InitialProfile::Constant { value: 0.5 },
        ..Default::default()
    };
    let r = validate_config(&cfg, Selection::Ladder);
    assert!(!r.passed());
    let range = r.check("initial_range").unwrap();
    assert!(!range.passed && range.margin < 0.0, "{range:?}");
}

#[test]
fn wide_tanh_droplet_passes() {
    let cfg = ExperimentConfig {
        initial: InitialProfile::Tanh {
            intervals: vec![[0.25, 0.75]],
            width: 0.05,
            low: 0.2,
            high: 0.8,
        },
        ..Default::default()
    };
    let r = validate_config(&cfg, Selection::Ladder);
    assert!(r.passed(), "{}", r.failures());
    assert!(r.check("transversal_crossing").unwrap().passed);
}

#[test]
fn k_above_the_logarithmic_schedule_is_rejected() {
    let cfg = ExperimentConfig {
        k: KSchedule::Fixed { value: 30.0 },
        schedule_delta: 5.0,
        ..Default::default()
    }
    .with_overrides(&["geometry.n=1000000".into()])
    .unwrap();
    let r = validate_config(&cfg, Selection::Hydro);
    let c = r.check("k_schedule_n1000000").unwrap();
    assert!(!c.passed);
    // 5 sqrt(log 1e6) = 18.5846...
    assert!((c.bound - 18.584_611).abs() < 1e-5, "{c:?}");
}

#[test]
fn flat_crossings_are_rejected() {
    let cfg = ExperimentConfig {
        initial: InitialProfile::Tanh {
            intervals: vec![[0.25, 0.75]],
            width: 500.0,
            low: 0.2,
            high: 0.8,
        },
        ..Default::default()
    };
    let r = validate_config(&cfg, Selection::Ladder);
    assert!(!r.check("transversal_crossing").unwrap().passed);
}

#[test]
fn balanced_control_needs_a_balanced_model() {
    let cfg = ExperimentConfig::default()
        .with_overrides(&["control=balanced".into()])
        .unwrap();
    let r = validate_config(&cfg, Selection::Ladder);
    assert!(!r.check("balanced").unwrap().passed);
    let ok = cfg
        .with_overrides(&[r#"model={"kind":"cubic","scale":200.0,"roots":[0.25,0.5,0.75]}"#.into()])
        .unwrap();
    let r = validate_config(&ok, Selection::Ladder);
    assert!(r.check("balanced").unwrap().passed, "{}", r.failures());
}

#[test]
fn blocks_must_tile_every_size() {
    let cfg = ExperimentConfig::default()
        .with_overrides(&["geometry.n=513".into()])
        .unwrap();
    let r = validate_config(&cfg, Selection::Kmc);
    assert!(!r.check("blocks_n513").unwrap().passed);
}

#[test]
fn non_positive_horizons_are_rejected() {
    let cfg = ExperimentConfig::default()
        .with_overrides(&["t_end=0".into()])
        .unwrap();
    assert!(
        !validate_config(&cfg, Selection::Ladder)
            .check("run_length")
            .unwrap()
            .passed
    );
}
