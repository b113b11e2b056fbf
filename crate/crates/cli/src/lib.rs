//! Experiment runner for the `nptcorr` toolkit.
//!
//! A run reads one TOML config, evaluates the named experiment and writes
//! `<name>.csv` plus a `<name>.json` sidecar with the config echo, its
//! SHA-256 hash and the sign conventions in force.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{Diagnostic, ExperimentConfig, ExperimentKind};
pub use experiments::{run, RunOutput};
pub use output::{config_hash, write_outputs, ResultRow, OUT_DIR_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("{context}: {source}")]
    Numerics {
        context: String,
        #[source]
        source: nptcorr::Error,
    },
    #[error("io error: {0}")]
    Io(String),
}

pub(crate) trait Context<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for nptcorr::Result<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerics { context: f(), source })
    }
}
