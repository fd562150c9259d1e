use std::path::PathBuf;

use gk_harness::config::{
    apply_override, Control, ExperimentConfig, InitialProfile, KSchedule, ModelConfig,
};
use gk_harness::HarnessError;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn defaults_describe_the_standard_model() {
    let cfg = ExperimentConfig::default();
    assert_eq!(
        cfg.model,
        ModelConfig::Cubic {
            scale: 200.0,
            roots: [0.25, 0.45, 0.75],
            radius: 1
        }
    );
    assert_eq!((cfg.geometry.dim, cfg.geometry.n), (1, 512));
    assert_eq!(cfg.k, KSchedule::Fixed { value: 25.0 });
    assert_eq!(cfg.seed, 20_240_601);
    assert_eq!(cfg.control, Control::None);
    let times = cfg.output_times();
    assert_eq!(times.len(), cfg.frames + 1);
    assert_eq!(*times.last().unwrap(), cfg.t_end);
}

#[test]
fn shipped_configurations_load() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path, &[])
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!cfg.name.is_empty());
        }
    }
}

#[test]
fn hydro_configuration_gives_k_16_at_n_2000() {
    let cfg = ExperimentConfig::load(&configs_dir().join("hydro.toml"), &[]).unwrap();
    assert!((cfg.k_at(2000) - 16.0).abs() < 1e-9);
    assert_eq!(cfg.hydro.sizes, vec![500, 1000, 2000]);
}

#[test]
fn overrides_reach_nested_fields_and_enums() {
    let cfg = ExperimentConfig::default()
        .with_overrides(&[
            "geometry.n=1000".into(),
            "name=sweep".into(),
            r#"k={"kind":"power","coefficient":2.0,"exponent":0.5}"#.into(),
            "control=balanced".into(),
            "ladder.sizes=[64,128]".into(),
        ])
        .unwrap();
    assert_eq!(cfg.geometry.n, 1000);
    assert_eq!(cfg.name, "sweep");
    assert!((cfg.k_at(100) - 20.0).abs() < 1e-12);
    assert_eq!(cfg.control, Control::Balanced);
    assert_eq!(cfg.ladder.sizes, vec![64, 128]);
}

#[test]
fn unknown_fields_and_bad_overrides_are_rejected() {
    let err = ExperimentConfig::default()
        .with_overrides(&["geometry.sides=3".into()])
        .unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "{err}");
    let mut doc = serde_json::json!({});
    assert!(apply_override(&mut doc, "no_equals_sign").is_err());
}

#[test]
fn toml_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("c.toml");
    std::fs::write(
        &toml_path,
        "name = \"t\"\nseed = 5\n[geometry]\ndim = 1\nn = 64\n",
    )
    .unwrap();
    let json_path = dir.path().join("c.json");
    std::fs::write(
        &json_path,
        r#"{"name": "t", "seed": 5, "geometry": {"dim": 1, "n": 64}}"#,
    )
    .unwrap();
    let a = ExperimentConfig::load(&toml_path, &[]).unwrap();
    let b = ExperimentConfig::load(&json_path, &[]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
}

#[test]
fn malformed_files_report_their_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "name = [").unwrap();
    match ExperimentConfig::load(&path, &[]) {
        Err(HarnessError::Parse { path: p, .. }) => assert!(p.ends_with("broken.toml")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn tanh_profile_crosses_alpha_star_at_the_interval_ends() {
    let profile = InitialProfile::default().prepare(1, 512, 0.45).unwrap();
    for x in [0.375, 0.625] {
        assert!((profile.eval(&[x]) - 0.45).abs() < 1e-12);
    }
    assert!(profile.eval(&[0.5]) > 0.45 && profile.eval(&[0.0]) < 0.45);
    let samples = profile.sample(512, 0.0);
    assert_eq!(samples.len(), 512);
    assert_eq!(samples[256], profile.eval(&[0.5]));
}

#[test]
fn profiles_refuse_the_wrong_dimension() {
    assert!(InitialProfile::default().prepare(2, 64, 0.45).is_err());
    let disk = InitialProfile::Disk {
        center: [0.5, 0.5],
        radius: 0.2,
        width: 0.05,
        low: 0.2,
        high: 0.8,
    };
    assert!(disk.prepare(1, 64, 0.45).is_err());
    let d = disk.prepare(2, 64, 0.45).unwrap();
    assert!((d.eval(&[0.7, 0.5]) - 0.45).abs() < 1e-12);
    assert!(d.front().is_some());
}
