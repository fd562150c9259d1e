//! `gkhydro`: command-line front end of the experiment harness.
//!
//! Every subcommand except `plot` loads a configuration (TOML or JSON,
//! defaults when omitted), applies `--set key=value` overrides, validates
//! it, runs and writes an output directory. The exit code is 0 only when
//! every check of the selected experiment passes, 1 when a check fails and
//! 2 on errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gk_core::wave::{solve_wave, verify_tails, WaveOptions};
use gk_harness::certify::run_certificates;
use gk_harness::config::ExperimentConfig;
use gk_harness::hydro::{run_hydrodynamic, run_kmc, HydroResults};
use gk_harness::ladder::run_pde_ladder;
use gk_harness::oracle::run_oracle;
use gk_harness::output::{OutputDir, CERTIFICATE_FILE};
use gk_harness::plot::plot_csv;
use gk_harness::pool::worker_count;
use gk_harness::validate::{validate_config, Selection};
use gk_harness::Result;

#[derive(Debug, Parser)]
#[command(
    name = "gkhydro",
    version,
    about = "Glauber-Kawasaki hydrodynamic-limit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Configuration file (`.toml`, otherwise JSON).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set geometry.n=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: `output_dir` from the configuration, else
    /// `results/<name>-<command>`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate table realising the configured reaction polynomial.
    DesignRates(Common),
    /// Traveling wave and its tails.
    Wave(Common),
    /// Lattice reaction-diffusion ladder.
    Pde(Common),
    /// Particle-system replicas at the configured size.
    Kmc(Common),
    /// Deterministic certificate chain.
    Certify(Common),
    /// Hydrodynamic experiment with the deviation sweep.
    Hydro(Common),
    /// Monte Carlo against the exact law on a tiny torus.
    Oracle(Common),
    /// SVG line chart of CSV columns.
    Plot {
        csv: PathBuf,
        /// Column on the horizontal axis.
        #[arg(long, short)]
        x: String,
        /// Columns to draw (default: all others).
        #[arg(long, short, value_delimiter = ',')]
        y: Vec<String>,
        /// Output file (default: the CSV path with extension `svg`).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    match &common.config {
        Some(path) => ExperimentConfig::load(path, &common.overrides),
        None => ExperimentConfig::default().with_overrides(&common.overrides),
    }
}

fn open(common: &Common, cfg: &ExperimentConfig, command: &str) -> Result<OutputDir> {
    let root = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("results").join(format!("{}-{command}", cfg.name)));
    OutputDir::create(&root, cfg)
}

fn report_validation(cfg: &ExperimentConfig, selection: Selection) -> bool {
    let report = validate_config(cfg, selection);
    for c in &report.checks {
        println!(
            "check {:<24} {} margin {:.4e}",
            c.name,
            if c.passed { "ok  " } else { "FAIL" },
            c.margin
        );
    }
    if !report.passed() {
        eprintln!("{}", report.failures());
    }
    report.passed()
}

fn finish(out: OutputDir, command: &str, passed: bool) -> Result<bool> {
    let root = out.root().to_path_buf();
    out.finish(command, passed)?;
    println!(
        "{command}: {} ({})",
        if passed { "passed" } else { "FAILED" },
        root.display()
    );
    Ok(passed)
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::DesignRates(common) => {
            let cfg = load(&common)?;
            let (f, rates) = cfg.model.build(cfg.geometry.dim)?;
            let report = gk_core::rates::validate_bistable_unbalanced(&f.polynomial(), true);
            let mut out = open(&common, &cfg, "design-rates")?;
            let rows: Vec<Vec<f64>> = rates
                .table()
                .iter()
                .enumerate()
                .map(|(p, &c)| vec![p as f64, c])
                .collect();
            out.write_table("rates.csv", &["pattern", "rate"], &rows)?;
            out.write_json(
                "design.json",
                &serde_json::json!({
                    "reaction_polynomial": f,
                    "induced_polynomial": rates.reaction_polynomial().coeffs(),
                    "max_rate": rates.max_rate(),
                    "validation": report,
                }),
            )?;
            println!("{}", report.summary());
            finish(out, "design-rates", report.passed())
        }
        Command::Wave(common) => {
            let cfg = load(&common)?;
            let (f, _) = cfg.model.build(cfg.geometry.dim)?;
            let opts = WaveOptions::automatic(&f)?;
            let wave = solve_wave(&f, opts.z_max, opts.h, opts.tol)?;
            let tails = verify_tails(&wave);
            let mut out = open(&common, &cfg, "wave")?;
            out.write_text("wave.csv", &wave.to_csv())?;
            out.write_json(
                "wave.json",
                &serde_json::json!({ "wave": wave.metadata(), "tails": tails }),
            )?;
            println!(
                "c_* = {:.10}, tail rates fit {:.5} / {:.5} against {:.5} / {:.5}",
                wave.c_star,
                tails.rate_left_fit,
                tails.rate_right_fit,
                tails.rate_left_theory,
                tails.rate_right_theory
            );
            finish(out, "wave", tails.passed)
        }
        Command::Pde(common) => {
            let cfg = load(&common)?;
            if !report_validation(&cfg, Selection::Ladder) {
                return Ok(false);
            }
            let r = run_pde_ladder(&cfg)?;
            let mut out = open(&common, &cfg, "pde")?;
            let mut rows = Vec::new();
            for rung in &r.rungs {
                for (j, &t) in rung.times.iter().enumerate() {
                    rows.push(vec![
                        rung.n as f64,
                        rung.k,
                        t,
                        rung.agreement[j],
                        rung.excluded[j],
                    ]);
                }
                println!(
                    "N {:>5} K {:>7.3}: agreement {:.4}, speed {}",
                    rung.n,
                    rung.k,
                    rung.final_agreement(),
                    rung.speed.map_or_else(
                        || format!(
                            "unavailable ({})",
                            rung.speed_failure.as_deref().unwrap_or("")
                        ),
                        |s| format!("{:.4} +- {:.4}", s.speed, s.half_width)
                    )
                );
            }
            out.write_table(
                "ladder.csv",
                &["n", "k", "t", "agreement", "excluded"],
                &rows,
            )?;
            let speeds: Vec<Vec<f64>> = r
                .rungs
                .iter()
                .map(|g| {
                    let s = g.speed;
                    vec![
                        g.n as f64,
                        g.k,
                        s.map_or(f64::NAN, |s| s.speed),
                        s.map_or(f64::NAN, |s| s.half_width),
                        g.speed_error.unwrap_or(f64::NAN),
                    ]
                })
                .collect();
            out.write_table(
                "ladder_speed.csv",
                &["n", "k", "speed", "half_width", "error"],
                &speeds,
            )?;
            out.write_json("ladder.json", &r)?;
            println!(
                "agreement monotone: {}, speed error decreasing: {}",
                r.agreement_monotone, r.speed_error_decreasing
            );
            finish(out, "pde", r.passed)
        }
        Command::Kmc(common) => {
            let cfg = load(&common)?;
            if !report_validation(&cfg, Selection::Kmc) {
                return Ok(false);
            }
            let r = run_kmc(&cfg, worker_count()?)?;
            let mut out = open(&common, &cfg, "kmc")?;
            write_hydro(&mut out, &r)?;
            finish(out, "kmc", r.speed_passed)
        }
        Command::Hydro(common) => {
            let cfg = load(&common)?;
            if !report_validation(&cfg, Selection::Hydro) {
                return Ok(false);
            }
            let r = run_hydrodynamic(&cfg, worker_count()?)?;
            let mut out = open(&common, &cfg, "hydro")?;
            write_hydro(&mut out, &r)?;
            println!(
                "deviation at t = {}: {:?} (decreasing: {})",
                r.match_time, r.deviation_at_match, r.deviation_decreasing
            );
            finish(out, "hydro", r.speed_passed && r.deviation_decreasing)
        }
        Command::Certify(common) => {
            let cfg = load(&common)?;
            if !report_validation(&cfg, Selection::Certify) {
                return Ok(false);
            }
            let cert = run_certificates(&cfg)?;
            let mut out = open(&common, &cfg, "certify")?;
            out.write_text(CERTIFICATE_FILE, &cert.to_json()?)?;
            for e in &cert.entries {
                println!(
                    "{:<28} {} value {:>12} margin {:>12}",
                    e.name,
                    if e.passed { "ok  " } else { "FAIL" },
                    e.value.map_or("n/a".into(), |v| format!("{v:.5e}")),
                    e.margin.map_or("n/a".into(), |v| format!("{v:.5e}"))
                );
            }
            finish(out, "certify", cert.passed)
        }
        Command::Oracle(common) => {
            let cfg = load(&common)?;
            let r = run_oracle(&cfg, worker_count()?)?;
            let mut out = open(&common, &cfg, "oracle")?;
            let mut rows = Vec::new();
            for t in &r.times {
                println!(
                    "t = {}: chi2 = {:.3} on {} dof, p = {:.4}",
                    t.t, t.statistic, t.dof, t.p_value
                );
                for (s, (&c, &p)) in t.counts.iter().zip(&t.exact).enumerate() {
                    rows.push(vec![t.t, s as f64, c as f64, p * r.replicas as f64]);
                }
            }
            out.write_table("oracle.csv", &["t", "state", "count", "expected"], &rows)?;
            out.write_json("oracle.json", &r)?;
            finish(out, "oracle", r.passed)
        }
        Command::Plot { csv, x, y, out } => {
            let target = out.unwrap_or_else(|| csv.with_extension("svg"));
            plot_csv(&csv, &x, &y, &target)?;
            println!("wrote {}", target.display());
            Ok(true)
        }
    }
}

fn write_hydro(out: &mut OutputDir, r: &HydroResults) -> Result<()> {
    let mut rows = Vec::new();
    for run in &r.runs {
        for (j, &t) in run.times.iter().enumerate() {
            let devs = &run.deviation[j];
            let mean = devs.iter().sum::<f64>() / devs.len() as f64;
            rows.push(vec![run.n as f64, run.k, t, mean, run.mass_spread(j)]);
        }
        let mut header = vec!["t".to_string()];
        header.extend(run.block_centres().iter().map(|x| format!("{x:.6}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let frames: Vec<Vec<f64>> = run
            .times
            .iter()
            .zip(&run.mean_density)
            .map(|(&t, d)| std::iter::once(t).chain(d.iter().copied()).collect())
            .collect();
        out.write_table(&format!("density_n{}.csv", run.n), &header, &frames)?;
    }
    out.write_table(
        "deviation.csv",
        &["n", "k", "t", "mean_deviation", "mass_spread"],
        &rows,
    )?;
    out.write_json("hydro.json", r)?;
    match (&r.speed, &r.speed_error) {
        (Some(s), _) => println!(
            "speed {:.4} +- {:.4} over {:?}, reference {:.4}",
            s.speed, s.half_width, r.speed_window, r.reference_speed
        ),
        (None, Some(e)) => println!("speed unavailable: {e}"),
        _ => {}
    }
    Ok(())
}
