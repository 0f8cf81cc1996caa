//! Noise built from RBF-kernel eigenvectors, `τ = τ₀ + β·ψ_γ`, with the
//! network tracked in the generalized (eigenvector) spectrum.

use serde::Serialize;
use spectral_core::kernelknn::{eigenfunction_frequencies, psi_gamma_noise, KernelEigenbasis};
use spectral_core::numeric::Matrix;
use spectral_core::relunet::{train_full_batch, Loss};
use spectral_core::spectra::{generalized_spectrum, SpectrumTrace};
use spectral_core::targets::{sample_grid, SinusoidTarget};

use super::common::*;
use super::{Report, RunOutput};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

/// Normalizers below this fraction of `max_n |τ̃[n]|` are raised to it, so
/// near-empty modes of the target do not divide by roundoff.
pub const NORM_FLOOR_REL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct KernelNoiseReport {
    pub points: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub beta: f64,
    pub censor: usize,
    /// First crossing of the seed-averaged normalized trace, per mode `n`.
    pub crossing: Vec<usize>,
    /// Spearman(n, crossing).
    pub spearman: f64,
    pub best_val_loss: f64,
    pub best_iteration: usize,
    pub final_val_loss: f64,
    /// First evaluation at which the residual in modes `n ≤ N/2` carries
    /// less energy than the residual in modes `n > N/2`.
    pub crossover_iteration: Option<usize>,
}

struct SeedRun {
    target_spec: Vec<f64>,
    clean_spec: Vec<f64>,
    raw: SpectrumTrace<f64>,
    normalized: SpectrumTrace<f64>,
    val: Vec<f64>,
    low: Vec<f64>,
    high: Vec<f64>,
}

pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::KernelNoise {
        return config_err(format!("kernel-noise runner given a {} config", cfg.kind));
    }
    let spec = cfg.kernel.as_ref().expect("validated");
    let target = cfg.target.as_ref().expect("validated");
    let n = spec.points;
    let modes: Vec<usize> = (1..=n).collect();
    let mut watch = Stopwatch::default();
    let grid = sample_grid::<f64>(n)?;
    let x = Matrix::new(n, 1, grid.clone())?;
    let basis = watch.time("eigenbasis", || KernelEigenbasis::new(x.clone(), spec.sigma))?;
    let psi = psi_gamma_noise(&basis, spec.gamma)?;
    let runs = watch.time("train", || {
        par_map(cfg.seeds.clone(), |seed| {
            let clean = SinusoidTarget::with_random_phases(target.frequencies.clone(), target.amplitudes(), seed)?
                .sample(&grid);
            let noisy: Vec<f64> = clean.iter().zip(&psi).map(|(c, p)| c + spec.beta * p).collect();
            let tau = generalized_spectrum(&noisy, &basis.vectors)?;
            let clean_spec = generalized_spectrum(&clean, &basis.vectors)?;
            let floor = NORM_FLOOR_REL * tau.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let denom: Vec<f64> = tau.iter().map(|v| v.abs().max(floor)).collect();
            let mut run = SeedRun {
                target_spec: tau.clone(),
                clean_spec,
                raw: SpectrumTrace::new(modes.clone())?,
                normalized: SpectrumTrace::new(modes.clone())?,
                val: Vec::new(),
                low: Vec::new(),
                high: Vec::new(),
            };
            let net = init_net(cfg, 1, None, seed)?;
            train_full_batch(net, &x, &noisy, &train_config(cfg, Loss::Mse), |e| {
                let f = generalized_spectrum(e.predictions, &basis.vectors)?;
                let (mut low, mut high) = (0.0, 0.0);
                for (i, (t, v)) in tau.iter().zip(&f).enumerate() {
                    let r = (t - v) * (t - v);
                    if 2 * (i + 1) <= n {
                        low += r;
                    } else {
                        high += r;
                    }
                }
                run.low.push(low);
                run.high.push(high);
                run.val.push(Loss::Mse.value(e.predictions, &clean));
                push_checked(&mut run.raw, e.step, f.iter().map(|v| v.abs()).collect())?;
                push_checked(
                    &mut run.normalized,
                    e.step,
                    f.iter().zip(&denom).map(|(v, d)| v.abs() / d).collect(),
                )
            })?;
            Ok(run)
        })
    })?;

    let mut artifacts = Vec::new();
    let bins = eigenfunction_frequencies(&basis)?;
    let eig_rows: Vec<Vec<f64>> = basis
        .values
        .iter()
        .zip(&bins)
        .zip(&psi_gamma_weights(n, spec.gamma))
        .map(|((l, b), w)| vec![*l, *b as f64, *w])
        .collect();
    artifacts.push(Artifact::new(
        "eigenbasis.csv",
        table_csv("n", &labels(&["eigenvalue", "dominant_bin", "psi_weight"]), &labels(&modes), &eig_rows),
    ));
    for (seed, r) in cfg.seeds.iter().zip(&runs) {
        artifacts.push(Artifact::new(format!("seed_{seed}/spectrum.csv"), r.raw.to_csv()));
        artifacts.push(Artifact::new(
            format!("seed_{seed}/curves.csv"),
            columns_csv(&["iter", "val", "residual_low", "residual_high"], r.raw.iterations(), &[
                r.val.clone(),
                r.low.clone(),
                r.high.clone(),
            ]),
        ));
    }
    let mean = mean_trace(&runs.iter().map(|r| r.normalized.clone()).collect::<Vec<_>>())?;
    let steps = mean.iterations().to_vec();
    let collect = |f: fn(&SeedRun) -> Vec<f64>| mean_rows(&runs.iter().map(f).collect::<Vec<_>>());
    let val = collect(|r| r.val.clone());
    let low = collect(|r| r.low.clone());
    let high = collect(|r| r.high.clone());
    let tau_abs = collect(|r| r.target_spec.iter().map(|v| v.abs()).collect());
    let clean_abs = collect(|r| r.clean_spec.iter().map(|v| v.abs()).collect());
    artifacts.push(Artifact::new("trace_normalized_mean.csv", mean.to_csv()));
    artifacts.push(Artifact::new(
        "heatmap_mean.svg",
        trace_heatmap(&mean, "|f̃[n]| / |τ̃[n]|, seed-averaged", "eigenvector n")?,
    ));
    artifacts.push(Artifact::new(
        "target_spectrum.csv",
        table_csv("n", &labels(&["clean", "noised"]), &labels(&modes), &clean_abs
            .iter()
            .zip(&tau_abs)
            .map(|(c, t)| vec![*c, *t])
            .collect::<Vec<_>>()),
    ));
    artifacts.push(Artifact::new(
        "curves_mean.csv",
        columns_csv(&["iter", "val", "residual_low", "residual_high"], &steps, &[val.clone(), low.clone(), high.clone()]),
    ));
    let censor = cfg.steps() + cfg.eval_every();
    let crossing = crossings(&mean, CROSSING_THRESHOLD, censor);
    let b = argmin(&val);
    let report = KernelNoiseReport {
        points: n,
        sigma: spec.sigma,
        gamma: spec.gamma,
        beta: spec.beta,
        censor,
        spearman: rank_corr(&usize_f64(&modes), &usize_f64(&crossing)),
        crossing,
        best_val_loss: val[b],
        best_iteration: steps[b],
        final_val_loss: *val.last().expect("final eval"),
        crossover_iteration: low.iter().zip(&high).position(|(l, h)| l < h).map(|i| steps[i]),
    };
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::KernelNoise(report),
        artifacts,
        stages: watch.into_stages(),
    })
}

fn psi_gamma_weights(n: usize, gamma: f64) -> Vec<f64> {
    (1..=n).map(|i| (i as f64 / n as f64).powf(gamma)).collect()
}
