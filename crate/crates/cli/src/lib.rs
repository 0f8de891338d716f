//! Batch front end for `msd-relax`: JSON problem files in, CSV/JSON reports out.
//!
//! Exit codes: 0 success, 1 malformed input or failed precondition, 2 a
//! flagged estimate, 3 a failing case or suite.

pub mod cases;
pub mod commands;
pub mod problem;
pub mod report;
pub mod suite;

pub use cases::cmd_paper_cases;
pub use commands::{cmd_approx, cmd_decompose, cmd_density, cmd_functional};
pub use suite::cmd_verify;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] msd_relax::Error),
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some estimate could not be certified within tolerance.
    Flagged(String),
    /// Named cases or checks failed.
    Failed(String),
}

/// Settings shared by all subcommands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub tol: f64,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self { tol: 1e-3, seed: 0 }
    }
}

pub fn exit_code(result: &Result<Status, CliError>) -> u8 {
    match result {
        Ok(Status::Ok) => 0,
        Err(_) => 1,
        Ok(Status::Flagged(_)) => 2,
        Ok(Status::Failed(_)) => 3,
    }
}
