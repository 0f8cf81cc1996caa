//! KNN classifiers versus a trained network on a binarized flower-curve
//! signal, compared through radial spectra of their probability maps.

use serde::Serialize;
use spectral_core::kernelknn::{knn_predict, probability_map, Box2};
use spectral_core::numeric::stats::loglog_slope;
use spectral_core::numeric::{dft2_radial, Matrix};
use spectral_core::relunet::{train_full_batch, Loss};
use spectral_core::targets::{binarize, build_manifold_dataset, ManifoldCurve, SinusoidTarget};

use super::common::*;
use super::manifold::LABEL_THRESHOLD;
use super::{Report, RunOutput};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config_err, LabResult};
use crate::manifest::Artifact;

#[derive(Debug, Clone, Serialize)]
pub struct ModelSpectrum {
    /// `knn5`, `knn10`, …, or `dnn`.
    pub model: String,
    /// Seed-averaged radial spectrum `ζ`, annulus 0 first.
    pub zeta: Vec<f64>,
    /// Log-log slope of `ζ` over annuli `fit_from..`.
    pub slope: f64,
    /// Share of `ζ` mass (annuli ≥ 1) at or beyond `fit_from`.
    pub tail_fraction: f64,
    /// Seed-averaged training accuracy of the thresholded map at the samples.
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KnnReport {
    pub frequency: usize,
    pub petals: usize,
    pub fit_from: usize,
    pub models: Vec<ModelSpectrum>,
}

impl KnnReport {
    pub fn model(&self, name: &str) -> Option<&ModelSpectrum> {
        self.models.iter().find(|m| m.model == name)
    }
}

struct SeedMaps {
    /// One map per KNN `K`, then the network.
    maps: Vec<Matrix<f64>>,
    accuracy: Vec<f64>,
}

fn accuracy(pred: impl Iterator<Item = f64>, labels: &[f64]) -> f64 {
    let hits = pred.zip(labels).filter(|(p, &t)| (*p > 0.5) == (t > 0.5)).count();
    hits as f64 / labels.len() as f64
}

pub fn run(cfg: &ExperimentConfig) -> LabResult<RunOutput> {
    if cfg.kind != ExperimentKind::KnnCompare {
        return config_err(format!("knn-compare runner given a {} config", cfg.kind));
    }
    let spec = cfg.knn.as_ref().expect("validated");
    let b = spec.bounds;
    let bx = Box2 {
        x0: b[0],
        y0: b[1],
        x1: b[2],
        y1: b[3],
    };
    let mut names: Vec<String> = spec.neighbours.iter().map(|k| format!("knn{k}")).collect();
    names.push("dnn".into());
    let mut watch = Stopwatch::default();
    let per_seed = watch.time("fit+map", || {
        par_map(cfg.seeds.clone(), |seed| {
            let target = SinusoidTarget::with_random_phases(vec![spec.frequency], vec![1.0], seed)?;
            let raw = build_manifold_dataset(&ManifoldCurve::new(spec.petals), &target, spec.samples)?;
            let y = binarize(raw.targets(), LABEL_THRESHOLD);
            let data = raw.with_targets(y.clone())?;
            let mut out = SeedMaps {
                maps: Vec::new(),
                accuracy: Vec::new(),
            };
            for &k in &spec.neighbours {
                out.maps.push(probability_map(|p| knn_predict(&data, k, p), bx, spec.resolution)?);
                let fit: Vec<f64> = (0..data.len())
                    .map(|i| knn_predict(&data, k, data.inputs().row(i)))
                    .collect::<Result<_, _>>()?;
                out.accuracy.push(accuracy(fit.into_iter(), &y));
            }
            let net = init_net(cfg, 2, None, seed)?;
            let trained = train_full_batch(net, data.inputs(), &y, &train_config(cfg, Loss::BceWithLogits), |_| Ok(()))?.net;
            out.maps
                .push(probability_map(|p| trained.forward(p).map(sigmoid), bx, spec.resolution)?);
            let logits = trained.forward_batch(data.inputs())?;
            out.accuracy.push(accuracy(logits.into_iter().map(sigmoid), &y));
            Ok(out)
        })
    })?;
    let bins = spec.resolution / 2;
    let annuli: Vec<f64> = (spec.fit_from..bins).map(|a| a as f64).collect();
    let mut artifacts = Vec::new();
    let mut models = Vec::new();
    for (m, name) in names.iter().enumerate() {
        let zetas = per_seed
            .iter()
            .map(|s| dft2_radial(&s.maps[m], bins))
            .collect::<Result<Vec<_>, _>>()?;
        let zeta = mean_rows(&zetas);
        let slope = loglog_slope(&annuli, &zeta[spec.fit_from..], 0.0)?;
        let total: f64 = zeta[1..].iter().sum();
        let tail: f64 = zeta[spec.fit_from..].iter().sum();
        let first = &per_seed[0].maps[m];
        let rows: Vec<Vec<f64>> = (0..first.rows()).map(|r| first.row(r).to_vec()).collect();
        artifacts.push(Artifact::new(
            format!("maps/{name}_seed_{}.svg", cfg.seeds[0]),
            matrix_heatmap(
                &rows,
                &format!("P(class 1), {name}"),
                ("x", Vec::new()),
                ("y", Vec::new()),
                (0.0, 1.0),
            )?,
        ));
        models.push(ModelSpectrum {
            model: name.clone(),
            zeta,
            slope,
            tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
            train_accuracy: per_seed.iter().map(|s| s.accuracy[m]).sum::<f64>() / per_seed.len() as f64,
        });
    }
    let cols: Vec<Vec<f64>> = models.iter().map(|m| m.zeta.clone()).collect();
    let mut header = vec!["annulus"];
    header.extend(names.iter().map(String::as_str));
    artifacts.push(Artifact::new("zeta.csv", columns_csv(&header, &(0..bins).collect::<Vec<_>>(), &cols)));
    let report = KnnReport {
        frequency: spec.frequency,
        petals: spec.petals,
        fit_from: spec.fit_from,
        models,
    };
    artifacts.push(summary_artifact(&report)?);
    Ok(RunOutput {
        report: Report::KnnCompare(report),
        artifacts,
        stages: watch.into_stages(),
    })
}
