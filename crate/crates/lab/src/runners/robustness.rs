//! Perturbation robustness: train, then average spectral magnitudes over
//! random parameter directions at a grid of perturbation sizes.

use serde::Serialize;
use spectral_core::spectra::robustness_profile;

use super::common::*;
use super::spectral_bias::train_seed;
use super::{Report, RunOutput};
use crate::config::{DeltaScale, ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessReport {
    pub frequencies: Vec<usize>,
    /// Relative magnitudes `c` as configured.
    pub deltas: Vec<f64>,
    pub scale: DeltaScale,
    pub directions: usize,
    /// Phase-averaged normalized magnitudes, `[delta][frequency]`.
    pub profile: Vec<Vec<f64>>,
    /// Spearman(frequency, magnitude) per delta; `null` where undefined.
    pub spearman: Vec<f64>,
    /// Reference scale `‖θ*‖` (or `‖θ*‖/√P`) per seed.
    pub reference: Vec<f64>,
    pub final_loss: Vec<f64>,
}

impl RobustnessReport {
    /// Spearman at the configured relative delta closest to `c`.
    pub fn spearman_at(&self, c: f64) -> Option<f64> {
        let i = (0..self.deltas.len()).min_by(|&a, &b| {
            (self.deltas[a] - c).abs().total_cmp(&(self.deltas[b] - c).abs())
        })?;
        Some(self.spearman[i])
    }
}

struct SeedProfile {
    values: Vec<Vec<f64>>,
    reference: f64,
    loss: f64,
}

pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::Robustness {
        return config_err(format!("robustness runner given a {} config", cfg.kind));
    }
    let spec = cfg.robustness.as_ref().expect("validated");
    let freqs = cfg.target.as_ref().expect("validated").frequencies.clone();
    let mut watch = Stopwatch::default();
    let per_seed = watch.time("train+perturb", || {
        par_map(cfg.seeds.clone(), |seed| {
            let (run, net, _, x) = train_seed(cfg, seed, false)?;
            let norm = net.param_norm();
            let reference = match spec.scale {
                DeltaScale::Norm => norm,
                DeltaScale::Rms => norm / (net.num_params() as f64).sqrt(),
            };
            let abs: Vec<f64> = spec.deltas.iter().map(|c| c * reference).collect();
            let p = robustness_profile(&net, &x, &freqs, &abs, spec.directions)?;
            Ok(SeedProfile {
                values: p.values,
                reference,
                loss: *run.losses.last().expect("final eval"),
            })
        })
    })?;
    let profile: Vec<Vec<f64>> = (0..spec.deltas.len())
        .map(|i| mean_rows(&per_seed.iter().map(|s| s.values[i].clone()).collect::<Vec<_>>()))
        .collect();
    let fx = usize_f64(&freqs);
    let spearman = profile.iter().map(|row| rank_corr(&fx, row)).collect();

    let delta_labels = labels(&spec.deltas);
    let freq_labels = labels(&freqs);
    let mut artifacts = Vec::new();
    for (seed, s) in cfg.seeds.iter().zip(&per_seed) {
        artifacts.push(Artifact::new(
            format!("seed_{seed}/profile.csv"),
            table_csv("delta", &freq_labels, &delta_labels, &s.values),
        ));
    }
    artifacts.push(Artifact::new(
        "profile_mean.csv",
        table_csv("delta", &freq_labels, &delta_labels, &profile),
    ));
    let transposed: Vec<Vec<f64>> = (0..freqs.len())
        .map(|j| profile.iter().map(|r| r[j]).collect())
        .collect();
    artifacts.push(Artifact::new(
        "heatmap_mean.svg",
        matrix_heatmap(
            &transposed,
            "perturbed / trained magnitude, phase-averaged",
            ("relative perturbation", delta_labels),
            ("frequency k", freq_labels),
            (0.0, 1.0),
        )?,
    ));
    let report = RobustnessReport {
        frequencies: freqs,
        deltas: spec.deltas.clone(),
        scale: spec.scale,
        directions: spec.directions,
        profile,
        spearman,
        reference: per_seed.iter().map(|s| s.reference).collect(),
        final_loss: per_seed.iter().map(|s| s.loss).collect(),
    };
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::Robustness(report),
        artifacts,
        stages: watch.into_stages(),
    })
}
