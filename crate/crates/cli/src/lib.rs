//! Batch experiment runner behind the `lrlab` binary.
//!
//! A run reads one TOML configuration, validates every domain constraint,
//! executes the experiment and writes CSV tables, a provenance record and a
//! certificate. Identical configuration and seed give byte-identical files
//! for any thread count.

pub mod config;
pub mod demos;
pub mod error;
pub mod experiments;
pub mod output;
pub mod validate;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use experiments::execute;
pub use output::{RunOutput, SCHEMA_VERSION};
pub use validate::{validate, Finding};
