//! The `rank1ks` command-line harness: configuration, the verification
//! suites, and CSV/JSON emission.
//!
//! Exit codes: 0 when every asserted inequality holds, 1 when one is
//! violated, 2 on a configuration or input error.

use std::path::{Path, PathBuf};

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod suites;

pub use cli::Cli;
pub use config::RunConfig;
pub use suites::{run_suites, Suite, SuiteResult};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RANK1KS_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rank1ks_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// Exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }
}

/// Sizes the global rayon pool from [`THREADS_ENV`]; without it rayon picks
/// one thread per core.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}
