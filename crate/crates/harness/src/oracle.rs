//! Monte Carlo against the exact law on a tiny torus.

use gk_core::kmc::{exact_distribution, replica_seed, simulate, MAX_EXACT_SITES};
use gk_core::lattice::{Configuration, TorusGeometry};
use gk_core::stats::chi_square_sf;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{config_error, Result};
use crate::pool::run_indexed;

/// Replicas per pooled work item; fixed so that results do not depend on
/// the worker count.
const CHUNK: u64 = 1000;

/// Expected counts below this are pooled into one cell.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTime {
    pub t: f64,
    pub counts: Vec<u64>,
    pub exact: Vec<f64>,
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResults {
    pub n: usize,
    pub k: f64,
    pub replicas: u64,
    pub level: f64,
    pub times: Vec<OracleTime>,
    pub passed: bool,
}

/// Pearson statistic and degrees of freedom, pooling sparse cells.
pub fn chi_square(counts: &[u64], probabilities: &[f64], total: u64) -> (f64, f64) {
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in counts.iter().zip(probabilities) {
        let e = p * total as f64;
        if e < MIN_EXPECTED {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    } else if pooled_obs > 0.0 {
        // mass observed on states the exact law gives probability zero
        return (f64::INFINITY, cells.max(2) as f64 - 1.0);
    }
    (stat, cells.max(2) as f64 - 1.0)
}

pub fn run_oracle(cfg: &ExperimentConfig, workers: usize) -> Result<OracleResults> {
    let o = &cfg.oracle;
    let dim = cfg.geometry.dim;
    let geometry = TorusGeometry::new(dim, o.n)?;
    if geometry.num_sites() > MAX_EXACT_SITES {
        return config_error(format!(
            "the exact oracle handles at most {MAX_EXACT_SITES} sites, got {}",
            geometry.num_sites()
        ));
    }
    let mut times = o.times.clone();
    times.sort_by(f64::total_cmp);
    if times.first().is_none_or(|&t| t <= 0.0) {
        return config_error("oracle times must be positive");
    }
    let (_, rates) = cfg.model.build(dim)?;
    let eta0 = Configuration::from_occupancy(geometry, &o.initial)?;
    let states = 1usize << geometry.num_sites();
    let t_end = *times.last().expect("nonempty");
    let chunks = o.replicas.div_ceil(CHUNK);
    let partial = run_indexed(chunks as usize, workers, |c| {
        let mut counts = vec![vec![0u64; states]; times.len()];
        let start = c as u64 * CHUNK;
        for r in start..(start + CHUNK).min(o.replicas) {
            let mut j = 0;
            simulate(
                eta0.clone(),
                &rates,
                o.k,
                t_end,
                &times,
                replica_seed(cfg.seed, r),
                |_, st| {
                    counts[j][st.configuration().to_index()] += 1;
                    j += 1;
                },
            )?;
        }
        Ok(counts)
    })?;
    let mut out = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let mut counts = vec![0u64; states];
        for p in &partial {
            for (a, b) in counts.iter_mut().zip(&p[j]) {
                *a += b;
            }
        }
        let exact = exact_distribution(&eta0, &rates, o.k, t)?;
        let (statistic, dof) = chi_square(&counts, &exact, o.replicas);
        let p_value = chi_square_sf(statistic, dof);
        out.push(OracleTime {
            t,
            counts,
            exact,
            statistic,
            dof,
            p_value,
            passed: p_value > 1.0 - o.level,
        });
    }
    Ok(OracleResults {
        n: o.n,
        k: o.k,
        replicas: o.replicas,
        level: o.level,
        passed: out.iter().all(|t| t.passed),
        times: out,
    })
}
