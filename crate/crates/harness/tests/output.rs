use std::fs;

use gk_harness::config::ExperimentConfig;
use gk_harness::output::{sha256_hex, Manifest, OutputDir, CONFIG_FILE, MANIFEST_FILE};
use gk_harness::plot::{line_chart_svg, plot_csv, read_columns, Series};

#[test]
fn sha256_of_known_inputs() {
    assert_eq!(
        sha256_hex(b""),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
    assert_eq!(
        sha256_hex(b"abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
}

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("nested/run");
    let cfg = ExperimentConfig::default()
        .with_overrides(&["name=manifest-test".into()])
        .unwrap();
    let mut out = OutputDir::create(&root, &cfg).unwrap();
    out.write_text("notes.txt", "hello\n").unwrap();
    out.write_table("table.csv", &["x", "y"], &[vec![0.0, 1.5], vec![1.0, -2.0]])
        .unwrap();
    out.write_json("value.json", &serde_json::json!({"a": 1}))
        .unwrap();
    let path = out.finish("test", true).unwrap();
    assert_eq!(path, root.join(MANIFEST_FILE));

    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(manifest.experiment, "manifest-test");
    assert_eq!(manifest.command, "test");
    assert!(manifest.passed);
    let names: Vec<&str> = manifest.files.iter().map(|f| f.file.as_str()).collect();
    assert_eq!(names, [CONFIG_FILE, "notes.txt", "table.csv", "value.json"]);
    for f in &manifest.files {
        let bytes = fs::read(root.join(&f.file)).unwrap();
        assert_eq!(f.bytes, bytes.len() as u64);
        assert_eq!(f.sha256, sha256_hex(&bytes));
    }
    assert_eq!(
        fs::read_to_string(root.join("table.csv")).unwrap(),
        "x,y\n0,1.5\n1,-2\n"
    );
}

#[test]
fn config_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default()
        .with_overrides(&["seed=99".into(), "geometry.n=1000".into()])
        .unwrap();
    OutputDir::create(dir.path(), &cfg).unwrap();
    let back = ExperimentConfig::load(&dir.path().join(CONFIG_FILE), &[]).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn csv_columns_become_an_svg_chart() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("speeds.csv");
    fs::write(
        &csv,
        "n,speed,error\n128,2.04,1.04\n256,1.67,0.67\n512,1.40,n/a\n",
    )
    .unwrap();
    let (header, cols) = read_columns(&csv).unwrap();
    assert_eq!(header, ["n", "speed", "error"]);
    assert!(cols[2][2].is_nan());

    let svg = dir.path().join("speeds.svg");
    plot_csv(&csv, "n", &[], &svg).unwrap();
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polyline").count(), 2);
    assert!(text.contains(">speed<") && text.contains(">error<"));

    assert!(plot_csv(&csv, "missing", &[], &svg).is_err());
    assert!(plot_csv(&csv, "n", &["nope".into()], &svg).is_err());
}

#[test]
fn chart_handles_degenerate_data_and_escapes_labels() {
    let s = line_chart_svg(
        "a < b & c",
        "t",
        &[Series {
            name: "flat".into(),
            points: vec![(1.0, 2.0), (1.0, 2.0)],
        }],
    );
    assert!(s.contains("a &lt; b &amp; c"));
    assert!(!s.contains("NaN"));
    let empty = line_chart_svg("empty", "x", &[]);
    assert!(empty.ends_with("</svg>\n"));
}
