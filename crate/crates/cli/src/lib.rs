//! Command-line front end and file formats for `geochart-core`.
//!
//! Binary blobs are little-endian and row-major; every blob has a JSON
//! sidecar or a `meta.json` describing its shape.

pub mod commands;
pub mod config;
pub mod io;
pub mod pipeline;
pub mod rundir;
pub mod study;

pub use config::{EnvironmentSource, GraphConfig, PipelineConfig};
pub use pipeline::{run_pipeline, PipelineOutput};
