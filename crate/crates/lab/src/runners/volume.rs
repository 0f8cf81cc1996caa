//! Monte Carlo estimate of the parameter-space volume whose network carries
//! spectral mass above a cutoff frequency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spectral_core::numeric::{dft_amplitudes, Matrix};
use spectral_core::targets::sample_grid;

use super::common::*;
use super::{Report, RunOutput};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    let (nf, p) = (n as f64, hits as f64 / n as f64);
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub epsilon: f64,
    pub bound: f64,
    pub samples: usize,
    pub cutoffs: Vec<usize>,
    pub counts: Vec<usize>,
    pub estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub wilson_low: Vec<f64>,
    pub wilson_high: Vec<f64>,
    /// Estimates never increase with the cutoff.
    pub nonincreasing: bool,
    /// Adjacent cutoff pairs `(c_i, c_{i+1})` whose 95% intervals are
    /// disjoint, i.e. a decrease resolved beyond Monte Carlo error.
    pub significant_drops: Vec<(usize, usize)>,
}

/// Highest DFT bin of a random network whose amplitude exceeds `epsilon`
/// (0 when none does).
fn top_bin(amps: &[f64], epsilon: f64) -> usize {
    amps.iter().rposition(|&a| a > epsilon).unwrap_or(0)
}

pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::VolumeMc {
        return config_err(format!("volume-mc runner given a {} config", cfg.kind));
    }
    let spec = cfg.volume.as_ref().expect("validated");
    let grid = sample_grid::<f64>(spec.grid)?;
    let x = Matrix::new(spec.grid, 1, grid)?;
    let mut watch = Stopwatch::default();
    let tops = watch.time("sample", || {
        par_map(cfg.seeds.clone(), |seed| {
            let shape = init_net(cfg, 1, None, seed)?;
            let p = shape.num_params();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(spec.samples);
            for _ in 0..spec.samples {
                let theta: Vec<f64> = (0..p).map(|_| rng.random_range(-spec.bound..=spec.bound)).collect();
                let f = shape.with_flat_params(&theta)?.forward_batch(&x)?;
                out.push(top_bin(&dft_amplitudes(&f)?, spec.epsilon));
            }
            Ok(out)
        })
    })?;
    let tops: Vec<usize> = tops.into_iter().flatten().collect();
    let n = tops.len();
    let counts: Vec<usize> = spec
        .cutoffs
        .iter()
        .map(|&c| tops.iter().filter(|&&t| t > c).count())
        .collect();
    let estimates: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let standard_errors = estimates.iter().map(|p| (p * (1.0 - p) / n as f64).sqrt()).collect();
    let (wilson_low, wilson_high): (Vec<f64>, Vec<f64>) =
        counts.iter().map(|&c| wilson_interval(c, n, Z95)).unzip();
    let mut order: Vec<usize> = (0..spec.cutoffs.len()).collect();
    order.sort_by_key(|&i| spec.cutoffs[i]);
    let nonincreasing = order.windows(2).all(|w| estimates[w[1]] <= estimates[w[0]]);
    let significant_drops = order
        .windows(2)
        .filter(|w| wilson_high[w[1]] < wilson_low[w[0]])
        .map(|w| (spec.cutoffs[w[0]], spec.cutoffs[w[1]]))
        .collect();
    let report = VolumeReport {
        epsilon: spec.epsilon,
        bound: spec.bound,
        samples: n,
        cutoffs: spec.cutoffs.clone(),
        counts: counts.clone(),
        estimates,
        standard_errors,
        wilson_low,
        wilson_high,
        nonincreasing,
        significant_drops,
    };
    let rows: Vec<Vec<f64>> = (0..spec.cutoffs.len())
        .map(|i| {
            vec![
                counts[i] as f64,
                report.estimates[i],
                report.standard_errors[i],
                report.wilson_low[i],
                report.wilson_high[i],
            ]
        })
        .collect();
    let mut artifacts = vec![Artifact::new(
        "volume.csv",
        table_csv(
            "cutoff",
            &labels(&["count", "estimate", "se", "wilson_low", "wilson_high"]),
            &labels(&spec.cutoffs),
            &rows,
        ),
    )];
    let mut hist = vec![0usize; spec.grid / 2 + 1];
    for &t in &tops {
        hist[t] += 1;
    }
    artifacts.push(Artifact::new(
        "top_bin_histogram.csv",
        columns_csv(&["bin", "count"], &(0..hist.len()).collect::<Vec<_>>(), &[usize_f64(&hist)]),
    ));
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::VolumeMc(report),
        artifacts,
        stages: watch.into_stages(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_reference_values() {
        // reference values from statsmodels proportion_confint(method="wilson")
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403_831_530_366).abs() < 1e-10 && (hi - 0.596_168_469_634).abs() < 1e-10, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532_799_863).abs() < 1e-10);
    }

    #[test]
    fn top_bin_nesting() {
        assert_eq!(top_bin(&[1.0, 0.5, 0.0, 0.2], 0.1), 3);
        assert_eq!(top_bin(&[1.0, 0.0], 2.0), 0);
    }
}
