//! Job files, batch pipelines and artifact writers behind the `cavity-phase` binary.

pub mod config;
pub mod jobs;
pub mod output;

pub use config::{FieldError, Format, JobConfig, JobKind};
pub use jobs::{run_job, JobError};
