use std::fmt::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use spectral_core::numeric::stats::spearman;
use spectral_core::relunet::{AdamConfig, InitScheme, Loss, ReluNet, TrainConfig};
use spectral_core::spectra::{first_crossing, SpectrumTrace};
use spectral_core::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::manifest::{Artifact, StageTiming};
use crate::render::{render_heatmap_svg, Axes};

/// Normalized magnitude at which a frequency counts as learned.
pub const CROSSING_THRESHOLD: f64 = 0.4;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "LAB_THREADS";

/// Maps `f` over `items` on the lab thread pool, preserving input order.
pub fn par_map<I, O, F>(items: Vec<I>, f: F) -> LabResult<Vec<O>>
where
    I: Send,
    O: Send,
    F: Fn(I) -> LabResult<O> + Sync + Send,
{
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => return Err(LabError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    pool.install(|| items.into_par_iter().map(f).collect())
}

/// Wall-clock bookkeeping for the manifest.
#[derive(Debug, Default)]
pub struct Stopwatch {
    stages: Vec<StageTiming>,
}

impl Stopwatch {
    pub fn time<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        r
    }

    pub fn into_stages(self) -> Vec<StageTiming> {
        self.stages
    }
}

pub fn widths(input_dim: usize, hidden: &[usize]) -> Vec<usize> {
    let mut w = Vec::with_capacity(hidden.len() + 2);
    w.push(input_dim);
    w.extend_from_slice(hidden);
    w.push(1);
    w
}

/// Fresh network with the configured hidden widths (or `hidden` when given).
pub fn init_net(cfg: &ExperimentConfig, input_dim: usize, hidden: Option<&[usize]>, seed: u64) -> LabResult<ReluNet<f64>> {
    let h = hidden.unwrap_or_else(|| &cfg.network.as_ref().expect("validated").hidden);
    Ok(ReluNet::init(&widths(input_dim, h), seed, InitScheme::UniformFanIn)?)
}

/// Appends a row, turning a non-finite value into a numeric error that names
/// the iteration and the offending column.
pub fn push_checked(trace: &mut SpectrumTrace<f64>, step: usize, row: Vec<f64>) -> spectral_core::Result<()> {
    if let Some(j) = row.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::Numeric(format!(
            "non-finite spectrum value at iteration {step} (frequency {})",
            trace.frequencies()[j]
        )));
    }
    trace.push(step, row)
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean of equally long rows.
pub fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut out = vec![0.0; rows.first().map_or(0, Vec::len)];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v / n;
        }
    }
    out
}

/// Index of the first minimum.
pub fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

pub fn labels<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

/// Heatmap of an arbitrary labelled matrix.
pub fn matrix_heatmap(
    values: &[Vec<f64>],
    title: &str,
    (x_label, col_labels): (&str, Vec<String>),
    (y_label, row_labels): (&str, Vec<String>),
    clip: (f64, f64),
) -> LabResult<String> {
    let axes = Axes {
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: y_label.to_string(),
        col_labels,
        row_labels,
    };
    render_heatmap_svg(values, &axes, clip)
}

pub fn train_config(cfg: &ExperimentConfig, loss: Loss) -> TrainConfig<f64> {
    let o = cfg.optimizer;
    let mut t = TrainConfig::new(cfg.steps(), cfg.eval_every(), loss);
    t.adam = AdamConfig {
        lr: o.lr,
        beta1: o.beta1,
        beta2: o.beta2,
        eps: o.eps,
    };
    t.weight_clip = cfg.network.as_ref().and_then(|n| n.weight_clip);
    t
}

/// Crossing iteration per column; columns that never cross are censored at
/// `steps + eval_every`.
pub fn crossings(trace: &SpectrumTrace<f64>, threshold: f64, censor: usize) -> Vec<usize> {
    first_crossing(trace, threshold)
        .into_iter()
        .map(|c| c.unwrap_or(censor))
        .collect()
}

/// Number of adjacent pairs with `v[i+1] < v[i]`.
pub fn adjacent_inversions(v: &[usize]) -> usize {
    v.windows(2).filter(|w| w[1] < w[0]).count()
}

/// Spearman correlation, `NaN` when undefined (constant input).
pub fn rank_corr(x: &[f64], y: &[f64]) -> f64 {
    let constant = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
    if constant(x) || constant(y) {
        return f64::NAN;
    }
    spearman(x, y).unwrap_or(f64::NAN)
}

pub fn as_f64<T: Copy + Into<f64>>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| x.into()).collect()
}

pub fn usize_f64(v: &[usize]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Elementwise mean of traces sharing frequencies and iterations.
pub fn mean_trace(traces: &[SpectrumTrace<f64>]) -> LabResult<SpectrumTrace<f64>> {
    let first = traces
        .first()
        .ok_or_else(|| LabError::Config("no traces to average".into()))?;
    let mut out = SpectrumTrace::new(first.frequencies().to_vec())?;
    let n = traces.len() as f64;
    for (r, &it) in first.iterations().iter().enumerate() {
        let mut row = vec![0.0; first.frequencies().len()];
        for t in traces {
            if t.iterations().get(r) != Some(&it) || t.frequencies() != first.frequencies() {
                return Err(LabError::Config("traces have mismatched layouts".into()));
            }
            for (o, v) in row.iter_mut().zip(&t.rows()[r]) {
                *o += v / n;
            }
        }
        out.push(it, row)?;
    }
    Ok(out)
}

/// Frequency (rows) × evaluation (columns) heatmap clipped to `[0, 1]`.
pub fn trace_heatmap(trace: &SpectrumTrace<f64>, title: &str, y_label: &str) -> LabResult<String> {
    trace_heatmap_clipped(trace, title, y_label, (0.0, 1.0))
}

pub fn trace_heatmap_clipped(
    trace: &SpectrumTrace<f64>,
    title: &str,
    y_label: &str,
    clip: (f64, f64),
) -> LabResult<String> {
    let cols = trace.len();
    let values: Vec<Vec<f64>> = (0..trace.frequencies().len())
        .map(|j| (0..cols).map(|i| trace.rows()[i][j]).collect())
        .collect();
    let axes = Axes {
        title: title.to_string(),
        x_label: "iteration".into(),
        y_label: y_label.into(),
        col_labels: trace.iterations().iter().map(|i| i.to_string()).collect(),
        row_labels: trace.frequencies().iter().map(|k| k.to_string()).collect(),
    };
    render_heatmap_svg(&values, &axes, clip)
}

/// `step,<name>...` CSV from equally long columns.
pub fn columns_csv(header: &[&str], steps: &[usize], cols: &[Vec<f64>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", header.join(","));
    for (i, st) in steps.iter().enumerate() {
        let _ = write!(s, "{st}");
        for c in cols {
            let _ = write!(s, ",{}", c[i]);
        }
        s.push('\n');
    }
    s
}

/// Matrix CSV with a leading label column.
pub fn table_csv(corner: &str, col_labels: &[String], row_labels: &[String], values: &[Vec<f64>]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{corner}");
    for c in col_labels {
        let _ = write!(s, ",{c}");
    }
    s.push('\n');
    for (r, row) in row_labels.iter().zip(values) {
        let _ = write!(s, "{r}");
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn summary_artifact<S: Serialize>(report: &S) -> LabResult<Artifact> {
    Ok(Artifact::new("summary.json", serde_json::to_string_pretty(report)? + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversions_and_crossings() {
        assert_eq!(adjacent_inversions(&[1, 2, 2, 5]), 0);
        assert_eq!(adjacent_inversions(&[1, 3, 2, 5, 4]), 2);
        let mut t = SpectrumTrace::new(vec![1, 2]).unwrap();
        t.push(0, vec![0.1, 0.0]).unwrap();
        t.push(10, vec![0.5, 0.2]).unwrap();
        assert_eq!(crossings(&t, 0.4, 20), vec![10, 20]);
    }

    #[test]
    fn rank_corr_is_undefined_for_constant_input() {
        assert!(rank_corr(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]).is_nan());
        assert!((rank_corr(&[1.0, 2.0, 3.0], &[3.0, 1.0, 0.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn averaging() {
        let mut a = SpectrumTrace::new(vec![3]).unwrap();
        a.push(0, vec![1.0]).unwrap();
        let mut b = SpectrumTrace::new(vec![3]).unwrap();
        b.push(0, vec![0.0]).unwrap();
        assert_eq!(mean_trace(&[a.clone(), b]).unwrap().rows()[0], vec![0.5]);
        let mut c = SpectrumTrace::new(vec![3]).unwrap();
        c.push(5, vec![0.0]).unwrap();
        assert!(mean_trace(&[a, c]).is_err());
    }
}
