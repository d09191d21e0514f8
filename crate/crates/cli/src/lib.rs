//! Experiment runner for the `ncconc` library: typed run configs, subcommand
//! dispatch and deterministic JSON/CSV reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod fit;
pub mod output;

pub use commands::{dispatch, is_randomized, SUBCOMMANDS};
pub use config::{ErrorReport, Format, Grid, ParamValue, Params, RunConfig, RunReport, ARTIFACT_VERSION, SCHEMA_VERSION};
pub use error::CliError;
pub use fit::{fit_constant, ConstantFit};

/// Environment variable capping the worker pool (`0` or unset = one per core).
pub const THREADS_ENV: &str = "NC_THREADS";

/// Sizes the global rayon pool from `NC_THREADS`. Returns the cap applied, if any.
pub fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {raw:?}")))?;
    if n == 0 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))?;
    Ok(Some(n))
}
