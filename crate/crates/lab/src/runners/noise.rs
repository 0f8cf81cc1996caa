//! Label noise `τ = τ₀ + β·sin(k‖x‖)` on two-class data, validated against
//! the clean labels on a held-out split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spectral_core::relunet::{train_full_batch, Loss};
use spectral_core::targets::{radial_wave_noise, synthetic_two_class};

use super::common::*;
use super::{Report, RunOutput};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

/// Seed-averaged validation statistics for one `(k, β)` pair.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseCell {
    pub frequency: f64,
    pub beta: f64,
    pub best_val_loss: f64,
    pub best_iteration: usize,
    /// `best_iteration / steps`.
    pub best_fraction: f64,
    pub final_val_loss: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub train_size: usize,
    pub val_size: usize,
    pub split_seed: u64,
    pub cells: Vec<NoiseCell>,
}

impl NoiseReport {
    pub fn cell(&self, k: f64, beta: f64) -> Option<&NoiseCell> {
        self.cells.iter().find(|c| c.frequency == k && c.beta == beta)
    }
}

/// Shuffles `0..n` with `seed` and returns (train, validation) indices.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let val = idx.split_off(cut);
    (idx, val)
}

struct Curves {
    steps: Vec<usize>,
    train: Vec<f64>,
    val: Vec<f64>,
}

pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::NoiseInjection {
        return config_err(format!("noise-injection runner given a {} config", cfg.kind));
    }
    let spec = cfg.noise.as_ref().expect("validated");
    let data = synthetic_two_class::<f64>(spec.dim, spec.per_class, spec.separation, spec.data_seed)?;
    let (tr, va) = split_indices(data.len(), spec.train_fraction, spec.split_seed);
    let (train, val) = (data.subset(&tr)?, data.subset(&va)?);
    let mut jobs = Vec::new();
    for &k in &spec.frequencies {
        for &b in &spec.betas {
            for &s in &cfg.seeds {
                jobs.push((k, b, s));
            }
        }
    }
    let mut watch = Stopwatch::default();
    let curves = watch.time("train", || {
        par_map(jobs.clone(), |(k, beta, seed)| {
            let noisy: Vec<f64> = (0..train.len())
                .map(|i| train.targets()[i] + beta * radial_wave_noise(train.inputs().row(i), k))
                .collect();
            let net = init_net(cfg, spec.dim, None, seed)?;
            let mut c = Curves {
                steps: Vec::new(),
                train: Vec::new(),
                val: Vec::new(),
            };
            train_full_batch(net, train.inputs(), &noisy, &train_config(cfg, Loss::Mse), |e| {
                let pred = e.net.forward_batch(val.inputs())?;
                c.steps.push(e.step);
                c.train.push(e.loss);
                c.val.push(Loss::Mse.value(&pred, val.targets()));
                Ok(())
            })?;
            Ok(c)
        })
    })?;
    let ns = cfg.seeds.len();
    let mut artifacts = Vec::new();
    let mut cells = Vec::new();
    for (g, chunk) in curves.chunks(ns).enumerate() {
        let (k, beta, _) = jobs[g * ns];
        let tag = format!("k{k}_beta{beta}");
        for ((_, _, s), c) in jobs[g * ns..].iter().zip(chunk) {
            artifacts.push(Artifact::new(
                format!("{tag}/seed_{s}/curves.csv"),
                columns_csv(&["iter", "train", "val"], &c.steps, &[c.train.clone(), c.val.clone()]),
            ));
        }
        let train_mean = mean_rows(&chunk.iter().map(|c| c.train.clone()).collect::<Vec<_>>());
        let val_mean = mean_rows(&chunk.iter().map(|c| c.val.clone()).collect::<Vec<_>>());
        let steps = &chunk[0].steps;
        artifacts.push(Artifact::new(
            format!("{tag}/curves_mean.csv"),
            columns_csv(&["iter", "train", "val"], steps, &[train_mean.clone(), val_mean.clone()]),
        ));
        let b = argmin(&val_mean);
        cells.push(NoiseCell {
            frequency: k,
            beta,
            best_val_loss: val_mean[b],
            best_iteration: steps[b],
            best_fraction: steps[b] as f64 / cfg.steps() as f64,
            final_val_loss: *val_mean.last().expect("final eval"),
            final_train_loss: *train_mean.last().expect("final eval"),
        });
    }
    let report = NoiseReport {
        train_size: train.len(),
        val_size: val.len(),
        split_seed: spec.split_seed,
        cells,
    };
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::NoiseInjection(report),
        artifacts,
        stages: watch.into_stages(),
    })
}
