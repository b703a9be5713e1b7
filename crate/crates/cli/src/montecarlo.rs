//! Parallel Monte Carlo driver. Replicates are independent given their
//! seed path, so results do not depend on the worker count.

use rayon::prelude::*;
use setgc_core::sim::{run_replicate, tally};
use setgc_core::{BootstrapConfig, DetectionMatrix, Error, Method, SimSpec};

pub fn run_monte_carlo(
    spec: &SimSpec,
    methods: &[Method],
    runs: u64,
    cfg: &BootstrapConfig,
) -> Result<Vec<DetectionMatrix>, Error> {
    if runs == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    cfg.validate()?;
    let outcomes = (0..runs).into_par_iter().map(|r| run_replicate(spec, methods, cfg, r)).collect();
    tally(methods, outcomes)
}

/// Runs `f` on a pool with `workers` threads (0 = rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
