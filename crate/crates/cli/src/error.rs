use std::path::PathBuf;

use thiserror::Error;

use crate::validate::Finding;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("configuration rejected:\n{}", render(.0))]
    Invalid(Vec<Finding>),

    #[error("{context}: {source}")]
    Compute { context: String, source: lrlab::Error },

    #[error("unknown demo `{0}` (try `lrlab demo --list`)")]
    UnknownDemo(String),

    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),

    #[error("serialization: {0}")]
    Serialize(String),
}

fn render(findings: &[Finding]) -> String {
    findings.iter().map(|f| format!("  {f}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a description of the failing step to a library error.
pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for lrlab::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Compute { context: what(), source })
    }
}
