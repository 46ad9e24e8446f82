//! Pipeline driver: config parsing, cached stages, reports and synthetic fixtures.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use config::PipelineConfig;
pub use error::CliError;
pub use pipeline::{Pipeline, Stage, StageOutcome};
