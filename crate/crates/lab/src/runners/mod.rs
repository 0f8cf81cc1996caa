//! One runner per experiment kind. Runners are pure: they return artifacts in
//! memory and never touch the filesystem.

pub mod ablation;
pub mod common;
pub mod kernel_noise;
pub mod knn;
pub mod manifold;
pub mod noise;
pub mod robustness;
pub mod spectral_bias;
pub mod volume;

use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::LabResult;
use crate::manifest::{Artifact, StageTiming};

pub use ablation::{AblationReport, AblationVariant};
pub use kernel_noise::KernelNoiseReport;
pub use knn::{KnnReport, ModelSpectrum};
pub use manifold::{ManifoldClassificationReport, ManifoldRegressionReport};
pub use noise::{NoiseCell, NoiseReport};
pub use robustness::RobustnessReport;
pub use spectral_bias::SpectralBiasReport;
pub use volume::VolumeReport;

/// Typed summary of a run, mirrored into `summary.json`.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    SpectralBias(SpectralBiasReport),
    Robustness(RobustnessReport),
    ManifoldRegression(ManifoldRegressionReport),
    ManifoldClassification(ManifoldClassificationReport),
    NoiseInjection(NoiseReport),
    KernelNoise(KernelNoiseReport),
    Ablation(AblationReport),
    VolumeMc(VolumeReport),
    KnnCompare(KnnReport),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
    pub stages: Vec<StageTiming>,
}

/// Validates `cfg` and dispatches to its runner.
pub fn execute(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::SpectralBias => spectral_bias::run(cfg),
        ExperimentKind::Robustness => robustness::run(cfg),
        ExperimentKind::ManifoldRegression => manifold::run_regression(cfg),
        ExperimentKind::ManifoldClassification => manifold::run_classification(cfg),
        ExperimentKind::NoiseInjection => noise::run(cfg),
        ExperimentKind::KernelNoise => kernel_noise::run(cfg),
        ExperimentKind::Ablation => ablation::run(cfg),
        ExperimentKind::VolumeMc => volume::run(cfg),
        ExperimentKind::KnnCompare => knn::run(cfg),
    }
}
