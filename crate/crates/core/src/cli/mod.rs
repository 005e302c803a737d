//! Configuration, commands and exit codes behind the `cutofflab` binary.

mod commands;
mod config;
mod reproduce;

pub use commands::{
    analyze, cmd_analyze, cmd_curve, curves, dichotomy_csv, prepare, profile_csv, AnalyzeReport, Curves,
    DecompositionView, DichotomyRow, MomentCutoff, ProfileRow, RotationView, SystemView, TimeScale, PLOT_SCRIPT,
    SCHEMA_VERSION,
};
pub use config::{RunConfig, ScenarioConfig, ScenarioFlags, DEFAULT_OUT};
pub use reproduce::{
    eigenvalue_mismatch, reproduce, Check, ReproduceTarget, Reproduction, JACOBI_ANGLE, JACOBI_CHECK_NORM,
    JACOBI_EIGENVALUES, JACOBI_GAP, JACOBI_HAT_NORM, JACOBI_INNER, JACOBI_RATE,
};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;
pub const EXIT_MOMENT: i32 = 4;
pub const EXIT_REPRODUCTION: i32 = 5;

/// Process exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnstableDrift { .. } => EXIT_UNSTABLE,
        Error::MomentGate { .. } => EXIT_MOMENT,
        Error::Config(_)
        | Error::NotSquare { .. }
        | Error::DimensionMismatch { .. }
        | Error::NonFinite
        | Error::DomainError(_)
        | Error::ZeroInitialState => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
