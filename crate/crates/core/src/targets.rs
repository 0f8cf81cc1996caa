//! Target functions and datasets: sinusoid superpositions, impulses,
//! thresholded labels, radial noise, flower-shaped curves and a synthetic
//! two-class point cloud.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::numeric::{Matrix, Real};

/// `N` points `i/N`, `i = 0..N−1`: uniform and endpoint-exclusive, so integer
/// frequencies are periodic on the grid.
pub fn sample_grid<T: Real>(n: usize) -> Result<Vec<T>> {
    if n < 2 {
        return invalid(format!("grid needs at least 2 points, got {n}"));
    }
    let nn = T::from_usize_lossy(n);
    Ok((0..n).map(|i| T::from_usize_lossy(i) / nn).collect())
}

/// `λ(z) = Σ_i A_i sin(2π k_i z + φ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidTarget<T> {
    frequencies: Vec<usize>,
    amplitudes: Vec<T>,
    phases: Vec<T>,
}

impl<T: Real> SinusoidTarget<T> {
    pub fn new(frequencies: Vec<usize>, amplitudes: Vec<T>, phases: Vec<T>) -> Result<Self> {
        if frequencies.len() != amplitudes.len() || frequencies.len() != phases.len() {
            return invalid("frequencies, amplitudes and phases differ in length");
        }
        if frequencies.is_empty() {
            return invalid("a sinusoid target needs at least one component");
        }
        if frequencies.contains(&0) {
            return invalid("frequencies must be positive");
        }
        if frequencies.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("frequencies must be strictly increasing");
        }
        if amplitudes.iter().chain(&phases).any(|v| !v.is_finite()) {
            return invalid("non-finite amplitude or phase");
        }
        Ok(Self {
            frequencies,
            amplitudes,
            phases,
        })
    }

    /// Phases drawn uniformly from `[0, 2π)` with a seeded generator.
    pub fn with_random_phases(frequencies: Vec<usize>, amplitudes: Vec<T>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases = (0..frequencies.len())
            .map(|_| T::lit(rng.random_range(0.0..TAU)))
            .collect();
        Self::new(frequencies, amplitudes, phases)
    }

    /// All phases zero.
    pub fn in_phase(frequencies: Vec<usize>, amplitudes: Vec<T>) -> Result<Self> {
        let n = frequencies.len();
        Self::new(frequencies, amplitudes, vec![T::zero(); n])
    }

    pub fn frequencies(&self) -> &[usize] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn eval(&self, z: T) -> T {
        let tau = T::TAU();
        self.frequencies
            .iter()
            .zip(&self.amplitudes)
            .zip(&self.phases)
            .map(|((&k, &a), &p)| a * (tau * T::from_usize_lossy(k) * z + p).sin())
            .sum()
    }

    pub fn sample(&self, grid: &[T]) -> Vec<T> {
        grid.iter().map(|&z| self.eval(z)).collect()
    }
}

/// Free-function spelling of [`SinusoidTarget::eval`].
pub fn eval_sinusoid<T: Real>(target: &SinusoidTarget<T>, z: T) -> T {
    target.eval(z)
}

/// `amplitude` at the grid point nearest `x0` on the `N`-grid, zero elsewhere.
pub fn delta_target<T: Real>(n: usize, x0: T, amplitude: T) -> Result<Vec<T>> {
    if n < 2 {
        return invalid(format!("grid needs at least 2 points, got {n}"));
    }
    if !(x0 >= T::zero() && x0 < T::one()) {
        return invalid("impulse location must lie in [0, 1)");
    }
    let idx = (x0 * T::from_usize_lossy(n)).round().as_f64() as usize % n;
    let mut out = vec![T::zero(); n];
    out[idx] = amplitude;
    Ok(out)
}

/// `1` where the value exceeds `threshold` strictly, else `0`.
pub fn binarize<T: Real>(values: &[T], threshold: T) -> Vec<T> {
    values
        .iter()
        .map(|&v| if v > threshold { T::one() } else { T::zero() })
        .collect()
}

/// `ψ(x) = sin(k‖x‖)`.
pub fn radial_wave_noise<T: Real>(x: &[T], k: T) -> T {
    let r = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    (k * r).sin()
}

/// Flower curve `γ_L(z) = R_L(z)·(cos 2πz, sin 2πz)` with
/// `R_L(z) = 1 + ½ sin(2πLz)`; `L = 0` is the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManifoldCurve {
    pub petals: usize,
}

impl ManifoldCurve {
    pub fn new(petals: usize) -> Self {
        Self { petals }
    }

    pub fn radius<T: Real>(&self, z: T) -> T {
        if self.petals == 0 {
            return T::one();
        }
        T::one() + T::lit(0.5) * (T::TAU() * T::from_usize_lossy(self.petals) * z).sin()
    }

    pub fn gamma<T: Real>(&self, z: T) -> [T; 2] {
        let r = self.radius(z);
        let a = T::TAU() * z;
        [r * a.cos(), r * a.sin()]
    }
}

/// Inputs, targets and (for curve data) the latent coordinate of each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledDataset<T> {
    inputs: Matrix<T>,
    targets: Vec<T>,
    latent: Option<Vec<T>>,
}

impl<T: Real> LabelledDataset<T> {
    pub fn new(inputs: Matrix<T>, targets: Vec<T>, latent: Option<Vec<T>>) -> Result<Self> {
        if targets.len() != inputs.rows() {
            return invalid(format!("{} targets for {} inputs", targets.len(), inputs.rows()));
        }
        if let Some(z) = &latent {
            if z.len() != inputs.rows() {
                return invalid("latent coordinates do not match the sample count");
            }
        }
        let values = targets.iter().chain(latent.iter().flatten());
        if values.into_iter().any(|v| !v.is_finite()) {
            return invalid("non-finite target or latent value");
        }
        Ok(Self {
            inputs,
            targets,
            latent,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn inputs(&self) -> &Matrix<T> {
        &self.inputs
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn latent(&self) -> Option<&[T]> {
        self.latent.as_deref()
    }

    /// Same inputs, new targets.
    pub fn with_targets(&self, targets: Vec<T>) -> Result<Self> {
        Self::new(self.inputs.clone(), targets, self.latent.clone())
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.len()) {
            return invalid(format!("row {bad} out of range"));
        }
        let d = self.dim();
        let inputs = Matrix::from_fn(idx.len(), d, |r, c| self.inputs.get(idx[r], c));
        let targets = idx.iter().map(|&i| self.targets[i]).collect();
        let latent = self
            .latent
            .as_ref()
            .map(|z| idx.iter().map(|&i| z[i]).collect());
        Self::new(inputs, targets, latent)
    }

    /// CSV with header `z,x1,…,xd,y`; `z` is empty when there is no latent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z");
        for j in 1..=self.dim() {
            let _ = write!(out, ",x{j}");
        }
        out.push_str(",y\n");
        for i in 0..self.len() {
            if let Some(z) = &self.latent {
                let _ = write!(out, "{}", z[i]);
            }
            for &v in self.inputs.row(i) {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", self.targets[i]);
        }
        out
    }
}

/// Standard deviation of each blob in [`synthetic_two_class`].
pub const BLOB_SIGMA: f64 = 0.05;

/// Two isotropic Gaussian blobs (σ = [`BLOB_SIGMA`]) in `[0,1]^d`, centred at
/// `0.5 ± (separation·σ/2)·(1,…,1)/√d` and clipped to the cube; label 0 for
/// the first `n_per_class` rows, 1 for the rest.
pub fn synthetic_two_class<T: Real>(
    d: usize,
    n_per_class: usize,
    separation: f64,
    seed: u64,
) -> Result<LabelledDataset<T>> {
    if d < 2 {
        return invalid("two-class data needs d >= 2");
    }
    if n_per_class == 0 {
        return invalid("need at least one sample per class");
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return invalid("separation must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = separation * BLOB_SIGMA / 2.0 / (d as f64).sqrt();
    let n = 2 * n_per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = usize::from(i >= n_per_class);
        let centre = if class == 0 { 0.5 - offset } else { 0.5 + offset };
        for _ in 0..d {
            let g: f64 = rng.sample(StandardNormal);
            data.push(T::lit((centre + BLOB_SIGMA * g).clamp(0.0, 1.0)));
        }
        labels.push(T::from_usize_lossy(class));
    }
    LabelledDataset::new(Matrix::new(n, d, data)?, labels, None)
}

/// `{γ_L(z_i), λ(z_i)}` on the `N`-grid, latent `z_i` kept.
pub fn build_manifold_dataset<T: Real>(
    curve: &ManifoldCurve,
    target: &SinusoidTarget<T>,
    n: usize,
) -> Result<LabelledDataset<T>> {
    let z = sample_grid::<T>(n)?;
    let inputs = Matrix::from_fn(n, 2, |i, j| curve.gamma(z[i])[j]);
    let y = target.sample(&z);
    LabelledDataset::new(inputs, y, Some(z))
}
