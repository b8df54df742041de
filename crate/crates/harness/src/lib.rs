//! Monte-Carlo convergence experiments for the varifold estimators.
//!
//! Each experiment sweeps a grid of sample sizes, repeats independent
//! seeded trials, and fits the log-log slope of the error against `N`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod stats;

pub use config::{ExperimentConfig, TangentMatrix, Variant};
pub use error::HarnessError;
pub use experiments::{
    run_fluctuation_experiment, run_measure_experiment, run_rate_experiment, run_tangent_experiment, ExperimentKind,
    RateResult,
};
pub use output::{emit_results, OutputPaths};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "VARIFOLD_THREADS";

/// Sizes the global worker pool from `VARIFOLD_THREADS` when set. Results
/// do not depend on the thread count.
pub fn configure_threads() -> Result<(), HarnessError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("{THREADS_ENV} = `{raw}` is not a thread count")))?;
    // A second call finds the pool already built; that is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
