//! Command-line front end: file formats, synthetic data, denoising pipelines and commands.

pub mod app;
pub mod error;
pub mod manifest;
pub mod patches;
pub mod pgm;
pub mod pipeline;
pub mod synth;
pub mod xyz;

pub use app::run;
pub use error::{CliError, CliResult};
