//! Configuration, pipeline and summaries behind the `pdepet` binary.

pub mod config;
pub mod pipeline;
pub mod summary;

pub use config::RunConfig;
pub use pipeline::{run_pipeline, Command};
