//! Frequency-resolved views of a network: spectrum traces over training,
//! early residual rates, perturbation robustness, eigenbasis spectra,
//! parameter-gradient spectra and the curve-composition kernel `P_γ`.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::numeric::{dft_amplitudes, dft_amplitudes_at, Matrix, Real};
use crate::relunet::ReluNet;
use crate::targets::{ManifoldCurve, SinusoidTarget};

/// Evaluation windows averaged by [`residual_rate`] unless told otherwise.
pub const DEFAULT_RATE_WINDOW: usize = 20;

/// Normalized spectral magnitudes `|f̃(k_i)|/A_i`, one row per evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace<T> {
    frequencies: Vec<usize>,
    iterations: Vec<usize>,
    rows: Vec<Vec<T>>,
}

impl<T: Real> SpectrumTrace<T> {
    pub fn new(frequencies: Vec<usize>) -> Result<Self> {
        if frequencies.is_empty() {
            return invalid("a trace needs at least one frequency");
        }
        Ok(Self {
            frequencies,
            iterations: Vec::new(),
            rows: Vec::new(),
        })
    }

    /// Appends an evaluation; iterations must increase.
    pub fn push(&mut self, iteration: usize, row: Vec<T>) -> Result<()> {
        if row.len() != self.frequencies.len() {
            return invalid(format!(
                "row of {} values for {} frequencies",
                row.len(),
                self.frequencies.len()
            ));
        }
        if row.iter().any(|v| !(v.is_finite() && *v >= T::zero())) {
            return invalid("trace values must be finite and non-negative");
        }
        if self.iterations.last().is_some_and(|&last| iteration <= last) {
            return invalid("trace iterations must increase");
        }
        self.iterations.push(iteration);
        self.rows.push(row);
        Ok(())
    }

    pub fn frequencies(&self) -> &[usize] {
        &self.frequencies
    }

    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter");
        for k in &self.frequencies {
            let _ = write!(out, ",k{k}");
        }
        out.push('\n');
        for (it, row) in self.iterations.iter().zip(&self.rows) {
            let _ = write!(out, "{it}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty trace file".into()))?;
        let mut cols = header.split(',');
        if cols.next().map(str::trim) != Some("iter") {
            return Err(Error::Format("trace header must start with `iter`".into()));
        }
        let frequencies = cols
            .map(|c| {
                c.trim()
                    .strip_prefix('k')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad frequency column `{c}`")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let mut trace = Self::new(frequencies)?;
        for (n, line) in lines.enumerate() {
            let bad = |what: &str| Error::Format(format!("line {}: {what}", n + 2));
            let mut fields = line.split(',');
            let it = fields
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad("bad iteration"))?;
            let row = fields
                .map(|s| s.trim().parse::<f64>().map(T::lit).map_err(|_| bad("bad value")))
                .collect::<Result<Vec<T>>>()?;
            trace.push(it, row).map_err(|e| bad(&e.to_string()))?;
        }
        Ok(trace)
    }
}

/// DFT amplitudes of `predictions` at the target's frequencies, divided by
/// the matching `|A_i|`.
pub fn record_spectrum<T: Real>(predictions: &[T], target: &SinusoidTarget<T>) -> Result<Vec<T>> {
    let raw = dft_amplitudes_at(predictions, target.frequencies())?;
    raw.iter()
        .zip(target.amplitudes())
        .map(|(&a, &amp)| {
            if amp == T::zero() {
                invalid("cannot normalize by a zero amplitude")
            } else {
                Ok(a / amp.abs())
            }
        })
        .collect()
}

/// Mean `|Δ value|/Δ iteration` over the first `window` evaluation steps of
/// every column.
pub fn residual_rate<T: Real>(trace: &SpectrumTrace<T>, window: usize) -> Result<Vec<T>> {
    if window == 0 {
        return invalid("rate window must be at least 1");
    }
    if trace.len() < window + 1 {
        return invalid(format!(
            "rate over {window} steps needs {} rows, trace has {}",
            window + 1,
            trace.len()
        ));
    }
    let it = trace.iterations();
    let w = T::from_usize_lossy(window);
    Ok((0..trace.frequencies().len())
        .map(|j| {
            (0..window)
                .map(|m| {
                    let dv = (trace.rows[m + 1][j] - trace.rows[m][j]).abs();
                    dv / T::from_usize_lossy(it[m + 1] - it[m])
                })
                .sum::<T>()
                / w
        })
        .collect())
}

/// First iteration at which each column reaches `threshold`; `None` if never.
pub fn first_crossing<T: Real>(trace: &SpectrumTrace<T>, threshold: T) -> Vec<Option<usize>> {
    (0..trace.frequencies().len())
        .map(|j| {
            trace
                .rows
                .iter()
                .position(|r| r[j] >= threshold)
                .map(|i| trace.iterations[i])
        })
        .collect()
}

/// `δ × frequency` table of perturbed-to-trained magnitude ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessProfile<T> {
    pub deltas: Vec<T>,
    pub frequencies: Vec<usize>,
    /// `values[i][j]` is the mean of `|f̃_{θ*+δ_i û}(k_j)|` over directions,
    /// divided by `|f̃_{θ*}(k_j)|`.
    pub values: Vec<Vec<T>>,
}

/// Averages spectral magnitudes over `n_directions` random unit directions
/// (direction `s` uses perturbation seed `s`, shared by every `δ`) and
/// normalizes by the unperturbed magnitudes.
pub fn robustness_profile<T: Real>(
    net: &ReluNet<T>,
    inputs: &Matrix<T>,
    frequencies: &[usize],
    deltas: &[T],
    n_directions: usize,
) -> Result<RobustnessProfile<T>> {
    if n_directions == 0 {
        return invalid("need at least one direction");
    }
    if deltas.iter().any(|d| !(*d >= T::zero())) {
        return invalid("perturbation magnitudes must be non-negative");
    }
    let base = dft_amplitudes_at(&net.forward_batch(inputs)?, frequencies)?;
    if let Some(j) = base.iter().position(|&b| b == T::zero()) {
        return Err(Error::Numeric(format!(
            "trained network has zero magnitude at frequency {}",
            frequencies[j]
        )));
    }
    let nd = T::from_usize_lossy(n_directions);
    let mut values = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if delta == T::zero() {
            // every direction reproduces θ*, so the ratio is exactly one
            values.push(vec![T::one(); frequencies.len()]);
            continue;
        }
        let mut acc = vec![T::zero(); frequencies.len()];
        for s in 0..n_directions {
            let pert = net.perturb(delta, s as u64)?;
            let a = dft_amplitudes_at(&pert.forward_batch(inputs)?, frequencies)?;
            for (o, v) in acc.iter_mut().zip(a) {
                *o += v;
            }
        }
        values.push(acc.iter().zip(&base).map(|(&s, &b)| s / nd / b).collect());
    }
    Ok(RobustnessProfile {
        deltas: deltas.to_vec(),
        frequencies: frequencies.to_vec(),
        values,
    })
}

/// `f̃[n] = f · v_n` for each eigenvector column.
pub fn generalized_spectrum<T: Real>(f: &[T], vectors: &Matrix<T>) -> Result<Vec<T>> {
    if f.len() != vectors.rows() {
        return invalid(format!(
            "{} samples against eigenvectors of length {}",
            f.len(),
            vectors.rows()
        ));
    }
    vectors.vecmat(f)
}

/// DFT amplitudes of `∂f/∂θ_j` sampled over the rows of `inputs`.
pub fn param_gradient_spectrum<T: Real>(
    net: &ReluNet<T>,
    param: usize,
    inputs: &Matrix<T>,
) -> Result<Vec<T>> {
    dft_amplitudes(&net.output_param_gradient(inputs, param)?)
}

/// One evaluation of the composition kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PGammaSample<T> {
    pub l: i64,
    pub k: [T; 2],
    pub value: Complex<T>,
}

/// Smallest quadrature size accepted by [`pgamma`].
pub const PGAMMA_MIN_POINTS: usize = 64;

/// `P_γ(l, k) = ∫₀¹ exp(i(k·γ(z) − 2πlz)) dz` by the periodic trapezoid rule
/// on `n` points.
pub fn pgamma<T: Real>(curve: &ManifoldCurve, l: i64, k: [T; 2], n: usize) -> Result<PGammaSample<T>> {
    if n < PGAMMA_MIN_POINTS {
        return invalid(format!("quadrature needs at least {PGAMMA_MIN_POINTS} points, got {n}"));
    }
    if !(k[0].is_finite() && k[1].is_finite()) {
        return invalid("non-finite wave vector");
    }
    let nn = T::from_usize_lossy(n);
    let tau = T::TAU();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        let z = T::from_usize_lossy(i) / nn;
        let g = curve.gamma(z);
        // reduce the harmonic's phase exactly before scaling by 2π
        let turns = T::lit(((l as i128 * i as i128).rem_euclid(n as i128)) as f64) / nn;
        let phase = k[0] * g[0] + k[1] * g[1] - tau * turns;
        acc += Complex::new(phase.cos(), phase.sin());
    }
    Ok(PGammaSample {
        l,
        k,
        value: acc / nn,
    })
}

/// Number of `l ∈ ls` whose `|P_γ(l, k)|` exceeds `rel · max_l |P_γ|`.
pub fn pgamma_support_width<T: Real>(
    curve: &ManifoldCurve,
    k: [T; 2],
    ls: impl IntoIterator<Item = i64>,
    n: usize,
    rel: T,
) -> Result<usize> {
    let mags = ls
        .into_iter()
        .map(|l| pgamma(curve, l, k, n).map(|s| s.value.norm()))
        .collect::<Result<Vec<T>>>()?;
    let max = mags.iter().fold(T::zero(), |m, &v| m.max(v));
    Ok(mags.iter().filter(|&&v| v > rel * max).count())
}
