//! Thread-pool drivers for the per-snapshot sweep and for experiment cells.

use rayon::prelude::*;

use dsbm_core::lsd::{fit_snapshot, lsd_from_sweep, sweep_from_fits, LsdConfig, LsdResult, SnapshotSweep};
use dsbm_core::{Prior, Result, TemporalNetwork};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DSBM_WORKERS";

/// Worker count from [`WORKERS_ENV`], else the number of available CPUs.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` inside a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Same result as the sequential sweep, with snapshots fitted concurrently.
pub fn snapshot_sweep_par(network: &TemporalNetwork, prior: &Prior, config: &LsdConfig) -> Result<SnapshotSweep> {
    let fits = (0..network.n_snapshots())
        .into_par_iter()
        .map(|t| fit_snapshot(network, t, prior, config))
        .collect();
    sweep_from_fits(fits, prior.k())
}

pub fn lsd_run_par(network: &TemporalNetwork, prior: &Prior, config: &LsdConfig) -> Result<LsdResult> {
    if network.n_steps() == 0 {
        return Err(dsbm_core::Error::NoTransitions);
    }
    let sweep = snapshot_sweep_par(network, prior, config)?;
    lsd_from_sweep(network, sweep, prior)
}
