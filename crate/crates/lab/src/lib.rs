//! Experiment harness around `spectral-core`: JSON configs, deterministic
//! runners, SVG heatmaps and hashed run manifests.

pub mod config;
pub mod error;
pub mod manifest;
pub mod render;
pub mod runners;

pub use config::{ExperimentConfig, ExperimentKind, Profile};
pub use error::{LabError, LabResult};
pub use runners::{execute, Report, RunOutput};

use std::path::Path;

/// Executes `cfg` and writes its artifacts and manifest under `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path) -> LabResult<(Report, manifest::RunManifest)> {
    let output = execute(cfg)?;
    let manifest = manifest::write_run(out, cfg, &output.artifacts, output.stages)?;
    Ok((output.report, manifest))
}
