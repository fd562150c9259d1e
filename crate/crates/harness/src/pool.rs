//! Bounded worker pool for independent replicas.
//!
//! Results come back in replica order whatever the scheduling, so every
//! reduction over them runs in a fixed order and is reproducible.

use rayon::prelude::*;

use crate::error::{HarnessError, Result};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "GKHYDRO_WORKERS";

/// Worker count from [`WORKERS_ENV`], defaulting to the available
/// parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HarnessError::Pool(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `job(i)` for `i in 0..count` on `workers` threads and returns the
/// results in index order. The first error (by index) is returned.
pub fn run_indexed<T, F>(count: usize, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let results: Vec<Result<T>> = pool.install(|| (0..count).into_par_iter().map(&job).collect());
    results.into_iter().collect()
}
