//! Command-line front end: argument and config-file parsing, parameter
//! sweeps, CSV output and the run summary.

mod error;
pub mod run;
pub mod spec;

pub use error::CliError;
pub use run::{execute, render_summary, write_csv, Row, RunOutput, CSV_COLUMNS};
pub use spec::{parse_args, ExperimentSpec, ModelPoint, RunMode, Sweep, SweepParam, ThetaGrid};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FD_D2D_THREADS";

/// Reads [`THREADS_ENV`]; unset, empty or zero means "use every core".
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(CliError::usage(
                "FD_D2D_THREADS",
                format!("expected a thread count, got `{v}`"),
            )),
        },
    }
}
