//! Sum-of-sinusoids regression on `[0, 1]`: per-frequency learning curves
//! and the growth of layer spectral norms.

use serde::Serialize;
use spectral_core::numeric::Matrix;
use spectral_core::relunet::{train_full_batch, Loss, ReluNet};
use spectral_core::spectra::{record_spectrum, SpectrumTrace};
use spectral_core::targets::{sample_grid, SinusoidTarget};

use super::common::*;
use super::RunOutput;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

/// Power iterations per layer for the norm trace.
pub const NORM_POWER_ITERS: usize = 10;
/// Reference step for the spectral-norm growth comparison.
pub const NORM_EARLY_STEP: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct SpectralBiasReport {
    pub frequencies: Vec<usize>,
    /// First crossing of the phase-averaged trace, censored at `censor`.
    pub crossing: Vec<usize>,
    pub censor: usize,
    pub inversions: usize,
    pub spearman: f64,
    pub per_seed_crossing: Vec<Vec<usize>>,
    /// Product of layer spectral norms at the first evaluation at or after
    /// step 100, per seed.
    pub norm_product_early: Vec<f64>,
    pub norm_product_final: Vec<f64>,
    pub norm_growth_seeds: usize,
    pub final_loss: Vec<f64>,
}

pub(crate) struct SeedRun {
    pub trace: SpectrumTrace<f64>,
    pub norm_steps: Vec<usize>,
    pub norms: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
}

/// Trains one network on the sinusoid target drawn with phase seed `seed`;
/// the same seed initializes the network.
pub(crate) fn train_seed(cfg: &ExperimentConfig, seed: u64, track_norms: bool) -> LabResult<(SeedRun, ReluNet<f64>, SinusoidTarget<f64>, Matrix<f64>)> {
    let spec = cfg.target.as_ref().expect("validated");
    let grid = sample_grid::<f64>(spec.samples)?;
    let target = SinusoidTarget::with_random_phases(spec.frequencies.clone(), spec.amplitudes(), seed)?;
    let y = target.sample(&grid);
    let x = Matrix::new(spec.samples, 1, grid)?;
    let net = init_net(cfg, 1, None, seed)?;
    let mut trace = SpectrumTrace::new(spec.frequencies.clone())?;
    let (mut norm_steps, mut norms, mut losses) = (Vec::new(), Vec::new(), Vec::new());
    let out = train_full_batch(net, &x, &y, &train_config(cfg, Loss::Mse), |e| {
        push_checked(&mut trace, e.step, record_spectrum(e.predictions, &target)?)?;
        losses.push(e.loss);
        if track_norms {
            let mut n = e.net.layer_spectral_norms(NORM_POWER_ITERS)?;
            n.push(n.iter().product());
            norm_steps.push(e.step);
            norms.push(n);
        }
        Ok(())
    })?;
    Ok((SeedRun { trace, norm_steps, norms, losses }, out.net, target, x))
}

pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::SpectralBias {
        return config_err(format!("spectral-bias runner given a {} config", cfg.kind));
    }
    let mut watch = Stopwatch::default();
    let runs = watch.time("train", || {
        par_map(cfg.seeds.clone(), |s| train_seed(cfg, s, true).map(|r| (r.0, r.1)))
    })?;
    let (runs, nets): (Vec<SeedRun>, Vec<ReluNet<f64>>) = runs.into_iter().unzip();
    let censor = cfg.steps() + cfg.eval_every();
    let traces: Vec<_> = runs.iter().map(|r| r.trace.clone()).collect();
    let mean = mean_trace(&traces)?;
    let freqs = mean.frequencies().to_vec();
    let crossing = crossings(&mean, CROSSING_THRESHOLD, censor);

    let mut early = Vec::new();
    let mut last = Vec::new();
    let mut artifacts = Vec::new();
    for ((seed, r), net) in cfg.seeds.iter().zip(&runs).zip(&nets) {
        artifacts.push(Artifact::new(format!("seed_{seed}/net.json"), net.to_json()));
        let idx = r.norm_steps.iter().position(|&s| s >= NORM_EARLY_STEP).unwrap_or(0);
        early.push(*r.norms[idx].last().expect("product column"));
        last.push(*r.norms.last().and_then(|n| n.last()).expect("product column"));
        artifacts.push(Artifact::new(format!("seed_{seed}/trace.csv"), r.trace.to_csv()));
        let layers = r.norms[0].len() - 1;
        let mut header: Vec<String> = vec!["iter".into()];
        header.extend((1..=layers).map(|l| format!("layer{l}")));
        header.push("product".into());
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        let cols: Vec<Vec<f64>> = (0..=layers).map(|c| r.norms.iter().map(|n| n[c]).collect()).collect();
        artifacts.push(Artifact::new(format!("seed_{seed}/norms.csv"), columns_csv(&h, &r.norm_steps, &cols)));
        artifacts.push(Artifact::new(
            format!("seed_{seed}/loss.csv"),
            columns_csv(&["iter", "loss"], r.trace.iterations(), &[r.losses.clone()]),
        ));
    }
    let report = SpectralBiasReport {
        inversions: adjacent_inversions(&crossing),
        spearman: rank_corr(&usize_f64(&freqs), &usize_f64(&crossing)),
        per_seed_crossing: runs.iter().map(|r| crossings(&r.trace, CROSSING_THRESHOLD, censor)).collect(),
        norm_growth_seeds: early.iter().zip(&last).filter(|(e, l)| l > e).count(),
        norm_product_early: early,
        norm_product_final: last,
        final_loss: runs.iter().map(|r| *r.losses.last().expect("final eval")).collect(),
        frequencies: freqs,
        crossing,
        censor,
    };
    artifacts.push(Artifact::new("trace_mean.csv", mean.to_csv()));
    artifacts.push(Artifact::new(
        "heatmap_mean.svg",
        trace_heatmap(&mean, "normalized |f(k)|/A, phase-averaged", "frequency k")?,
    ));
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: super::Report::SpectralBias(report),
        artifacts,
        stages: watch.into_stages(),
    })
}
