//! Targets defined on flower curves `γ_L`: regression traces per `L` and a
//! `(k, L)` classification accuracy grid.

use serde::Serialize;
use spectral_core::relunet::{train_full_batch, Loss};
use spectral_core::spectra::{record_spectrum, SpectrumTrace};
use spectral_core::targets::{binarize, build_manifold_dataset, ManifoldCurve, SinusoidTarget};

use super::common::*;
use super::{Report, RunOutput};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

/// Threshold turning `sin(2πkz + φ)` into binary labels.
pub const LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldRegressionReport {
    pub petals: Vec<usize>,
    pub frequencies: Vec<usize>,
    pub censor: usize,
    /// First crossing of the phase-averaged trace, `[L][frequency]`.
    pub crossing: Vec<Vec<usize>>,
    /// Mean over frequencies of `crossing`, per `L`.
    pub mean_crossing: Vec<f64>,
    /// Seed-averaged final training loss per `L`.
    pub final_loss: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldClassificationReport {
    pub petals: Vec<usize>,
    pub frequencies: Vec<usize>,
    /// Seed-averaged final training accuracy, `[frequency][L]`.
    pub accuracy: Vec<Vec<f64>>,
    /// Spearman(accuracy, L) per frequency; `null` when accuracy is constant.
    pub spearman: Vec<f64>,
    /// Mean of the defined entries of `spearman`.
    pub mean_spearman: f64,
}

impl ManifoldClassificationReport {
    pub fn accuracy_at(&self, k: usize, l: usize) -> Option<f64> {
        let i = self.frequencies.iter().position(|&f| f == k)?;
        let j = self.petals.iter().position(|&p| p == l)?;
        Some(self.accuracy[i][j])
    }
}

struct RegressionCell {
    trace: SpectrumTrace<f64>,
    losses: Vec<f64>,
}

fn regression_cell(cfg: &ExperimentConfig, petals: usize, seed: u64) -> LabResult<RegressionCell> {
    let spec = cfg.target.as_ref().expect("validated");
    let target = SinusoidTarget::with_random_phases(spec.frequencies.clone(), spec.amplitudes(), seed)?;
    let data = build_manifold_dataset(&ManifoldCurve::new(petals), &target, spec.samples)?;
    let net = init_net(cfg, 2, None, seed)?;
    let mut trace = SpectrumTrace::new(spec.frequencies.clone())?;
    let mut losses = Vec::new();
    train_full_batch(net, data.inputs(), data.targets(), &train_config(cfg, Loss::Mse), |e| {
        losses.push(e.loss);
        push_checked(&mut trace, e.step, record_spectrum(e.predictions, &target)?)
    })?;
    Ok(RegressionCell { trace, losses })
}

pub fn run_regression(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::ManifoldRegression {
        return config_err(format!("manifold-regression runner given a {} config", cfg.kind));
    }
    let petals = cfg.manifold.as_ref().expect("validated").petals.clone();
    let jobs: Vec<(usize, u64)> = petals
        .iter()
        .flat_map(|&l| cfg.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let mut watch = Stopwatch::default();
    let cells = watch.time("train", || par_map(jobs, |(l, s)| regression_cell(cfg, l, s)))?;
    let censor = cfg.steps() + cfg.eval_every();
    let ns = cfg.seeds.len();
    let mut artifacts = Vec::new();
    let (mut crossing, mut mean_crossing, mut final_loss) = (Vec::new(), Vec::new(), Vec::new());
    for (li, &l) in petals.iter().enumerate() {
        let group = &cells[li * ns..(li + 1) * ns];
        for (seed, c) in cfg.seeds.iter().zip(group) {
            artifacts.push(Artifact::new(format!("L{l}/seed_{seed}/trace.csv"), c.trace.to_csv()));
        }
        let traces: Vec<_> = group.iter().map(|c| c.trace.clone()).collect();
        let mean = mean_trace(&traces)?;
        let loss = mean_rows(&group.iter().map(|c| c.losses.clone()).collect::<Vec<_>>());
        artifacts.push(Artifact::new(format!("L{l}/trace_mean.csv"), mean.to_csv()));
        artifacts.push(Artifact::new(
            format!("L{l}/loss_mean.csv"),
            columns_csv(&["iter", "loss"], mean.iterations(), &[loss.clone()]),
        ));
        artifacts.push(Artifact::new(
            format!("L{l}/heatmap_mean.svg"),
            trace_heatmap(&mean, &format!("spectrum of f∘γ_L, L = {l}"), "frequency k")?,
        ));
        let c = crossings(&mean, CROSSING_THRESHOLD, censor);
        mean_crossing.push(c.iter().sum::<usize>() as f64 / c.len() as f64);
        crossing.push(c);
        final_loss.push(*loss.last().expect("final eval"));
    }
    let report = ManifoldRegressionReport {
        frequencies: cfg.target.as_ref().expect("validated").frequencies.clone(),
        petals,
        censor,
        crossing,
        mean_crossing,
        final_loss,
    };
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::ManifoldRegression(report),
        artifacts,
        stages: watch.into_stages(),
    })
}

struct ClassificationCell {
    steps: Vec<usize>,
    losses: Vec<f64>,
    accuracy: Vec<f64>,
}

fn classification_cell(cfg: &ExperimentConfig, k: usize, petals: usize, seed: u64) -> LabResult<ClassificationCell> {
    let n = cfg.target.as_ref().expect("validated").samples;
    let target = SinusoidTarget::with_random_phases(vec![k], vec![1.0], seed)?;
    let data = build_manifold_dataset(&ManifoldCurve::new(petals), &target, n)?;
    let y = binarize(data.targets(), LABEL_THRESHOLD);
    let net = init_net(cfg, 2, None, seed)?;
    let mut cell = ClassificationCell {
        steps: Vec::new(),
        losses: Vec::new(),
        accuracy: Vec::new(),
    };
    train_full_batch(net, data.inputs(), &y, &train_config(cfg, Loss::BceWithLogits), |e| {
        let hits = e
            .predictions
            .iter()
            .zip(&y)
            .filter(|(&p, &t)| (p > 0.0) == (t > 0.5))
            .count();
        cell.steps.push(e.step);
        cell.losses.push(e.loss);
        cell.accuracy.push(hits as f64 / n as f64);
        Ok(())
    })?;
    Ok(cell)
}

pub fn run_classification(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::ManifoldClassification {
        return config_err(format!("manifold-classification runner given a {} config", cfg.kind));
    }
    let petals = cfg.manifold.as_ref().expect("validated").petals.clone();
    let freqs = cfg.target.as_ref().expect("validated").frequencies.clone();
    let mut jobs = Vec::new();
    for &k in &freqs {
        for &l in &petals {
            for &s in &cfg.seeds {
                jobs.push((k, l, s));
            }
        }
    }
    let mut watch = Stopwatch::default();
    let cells = watch.time("train", || par_map(jobs.clone(), |(k, l, s)| classification_cell(cfg, k, l, s)))?;
    let mut artifacts = Vec::new();
    for ((k, l, s), c) in jobs.iter().zip(&cells) {
        artifacts.push(Artifact::new(
            format!("k{k}_L{l}/seed_{s}/curve.csv"),
            columns_csv(&["iter", "loss", "accuracy"], &c.steps, &[c.losses.clone(), c.accuracy.clone()]),
        ));
    }
    let ns = cfg.seeds.len();
    let accuracy: Vec<Vec<f64>> = (0..freqs.len())
        .map(|i| {
            (0..petals.len())
                .map(|j| {
                    let start = (i * petals.len() + j) * ns;
                    let finals: Vec<f64> = cells[start..start + ns]
                        .iter()
                        .map(|c| *c.accuracy.last().expect("final eval"))
                        .collect();
                    finals.iter().sum::<f64>() / ns as f64
                })
                .collect()
        })
        .collect();
    let lx = usize_f64(&petals);
    let spearman: Vec<f64> = accuracy.iter().map(|row| rank_corr(&lx, row)).collect();
    let defined: Vec<f64> = spearman.iter().copied().filter(|v| v.is_finite()).collect();
    let mean_spearman = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    let by_l: Vec<Vec<f64>> = (0..petals.len())
        .map(|j| accuracy.iter().map(|r| r[j]).collect())
        .collect();
    artifacts.push(Artifact::new("accuracy.csv", table_csv("L", &labels(&freqs), &labels(&petals), &by_l)));
    artifacts.push(Artifact::new(
        "accuracy.svg",
        matrix_heatmap(
            &by_l,
            "final training accuracy",
            ("frequency k", labels(&freqs)),
            ("petals L", labels(&petals)),
            (0.5, 1.0),
        )?,
    ));
    let report = ManifoldClassificationReport {
        petals,
        frequencies: freqs,
        accuracy,
        spearman,
        mean_spearman,
    };
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::ManifoldClassification(report),
        artifacts,
        stages: watch.into_stages(),
    })
}
