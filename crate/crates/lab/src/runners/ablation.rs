//! Architecture ablation on a single-impulse target: which frequencies each
//! depth, width or weight clip manages to fit.

use serde::Serialize;
use spectral_core::numeric::{dft_amplitudes_at, Matrix};
use spectral_core::relunet::{train_full_batch, Loss};
use spectral_core::spectra::SpectrumTrace;
use spectral_core::targets::{delta_target, sample_grid};

use super::common::*;
use super::{Report, RunOutput};
use crate::config::{AblationAxis, ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

#[derive(Debug, Clone, Serialize)]
pub struct AblationVariant {
    pub value: f64,
    pub hidden: Vec<usize>,
    pub weight_clip: Option<f64>,
    /// Frequencies whose seed-averaged final normalized magnitude reaches
    /// the fit threshold.
    pub fitted: Vec<usize>,
    pub max_fitted: Option<usize>,
    pub final_loss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub axis: AblationAxis,
    pub fit_threshold: f64,
    pub variants: Vec<AblationVariant>,
}

impl AblationReport {
    pub fn variant(&self, value: f64) -> Option<&AblationVariant> {
        self.variants.iter().find(|v| v.value == value)
    }
}

/// Hidden widths and clip for one ablation value.
fn architecture(cfg: &ExperimentConfig, axis: AblationAxis, value: f64) -> (Vec<usize>, Option<f64>) {
    let net = cfg.network.as_ref().expect("validated");
    match axis {
        AblationAxis::Depth => (vec![net.hidden[0]; value as usize], net.weight_clip),
        AblationAxis::Width => (vec![value as usize; net.hidden.len()], net.weight_clip),
        AblationAxis::Clip => (net.hidden.clone(), Some(value)),
    }
}

struct Cell {
    trace: SpectrumTrace<f64>,
    loss: f64,
}

pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::Ablation {
        return config_err(format!("ablation runner given a {} config", cfg.kind));
    }
    let spec = cfg.ablation.as_ref().expect("validated");
    let n = spec.samples;
    let freqs: Vec<usize> = (1..=n / 2).collect();
    let grid = sample_grid::<f64>(n)?;
    let x = Matrix::new(n, 1, grid)?;
    let y = delta_target(n, spec.position, spec.amplitude)?;
    let reference = dft_amplitudes_at(&y, &freqs)?;
    let mut jobs = Vec::new();
    for &v in &spec.values {
        for &s in &cfg.seeds {
            jobs.push((v, s));
        }
    }
    let mut watch = Stopwatch::default();
    let cells = watch.time("train", || {
        par_map(jobs.clone(), |(value, seed)| {
            let (hidden, clip) = architecture(cfg, spec.axis, value);
            let net = init_net(cfg, 1, Some(&hidden), seed)?;
            let mut tc = train_config(cfg, Loss::Mse);
            tc.weight_clip = clip;
            let mut trace = SpectrumTrace::new(freqs.clone())?;
            let out = train_full_batch(net, &x, &y, &tc, |e| {
                let a = dft_amplitudes_at(e.predictions, &freqs)?;
                push_checked(&mut trace, e.step, a.iter().zip(&reference).map(|(a, r)| a / r).collect())
            })?;
            Ok(Cell {
                trace,
                loss: *out.losses.last().expect("final loss"),
            })
        })
    })?;
    let ns = cfg.seeds.len();
    let mut artifacts = Vec::new();
    let mut variants = Vec::new();
    for (vi, &value) in spec.values.iter().enumerate() {
        let group = &cells[vi * ns..(vi + 1) * ns];
        let tag = format!("value_{value}");
        for (s, c) in cfg.seeds.iter().zip(group) {
            artifacts.push(Artifact::new(format!("{tag}/seed_{s}/trace.csv"), c.trace.to_csv()));
        }
        let mean = mean_trace(&group.iter().map(|c| c.trace.clone()).collect::<Vec<_>>())?;
        artifacts.push(Artifact::new(format!("{tag}/trace_mean.csv"), mean.to_csv()));
        artifacts.push(Artifact::new(
            format!("{tag}/heatmap_mean.svg"),
            trace_heatmap(&mean, &format!("impulse fit, {:?} = {value}", spec.axis).to_lowercase(), "frequency k")?,
        ));
        let last = mean.rows().last().expect("final eval");
        let fitted: Vec<usize> = freqs
            .iter()
            .zip(last)
            .filter(|(_, &m)| m >= spec.fit_threshold)
            .map(|(&k, _)| k)
            .collect();
        let (hidden, weight_clip) = architecture(cfg, spec.axis, value);
        variants.push(AblationVariant {
            value,
            hidden,
            weight_clip,
            max_fitted: fitted.last().copied(),
            fitted,
            final_loss: group.iter().map(|c| c.loss).sum::<f64>() / ns as f64,
        });
    }
    let report = AblationReport {
        axis: spec.axis,
        fit_threshold: spec.fit_threshold,
        variants,
    };
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::Ablation(report),
        artifacts,
        stages: watch.into_stages(),
    })
}
