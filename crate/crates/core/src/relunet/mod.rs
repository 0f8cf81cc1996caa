//! Fully connected ReLU networks `f: R^d → R` with exact backpropagation,
//! full-batch Adam and parameter-space utilities.

mod adam;
mod backprop;
mod checkpoint;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::numeric::{gemm, spectral_norm, Matrix, Op, Real};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backprop::{Gradients, Loss};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use train::{train_full_batch, EvalEvent, TrainConfig, TrainOutcome};

/// One affine map `x ↦ W x + b`, `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Layer<T> {
    pub fn new(weight: Matrix<T>, bias: Vec<T>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return invalid(format!(
                "bias of length {} for a layer with {} outputs",
                bias.len(),
                weight.rows()
            ));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return invalid("non-finite bias");
        }
        Ok(Self { weight, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    fn zeros_like(&self) -> Self {
        Self {
            weight: Matrix::zeros(self.out_dim(), self.in_dim()),
            bias: vec![T::zero(); self.out_dim()],
        }
    }
}

/// Parameter initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Weights and biases uniform in `[−1/√fan_in, 1/√fan_in]`.
    UniformFanIn,
    /// Weights and biases uniform in `[−scale, scale]`.
    FixedScale(f64),
}

/// `f = T_{L+1} ∘ σ ∘ T_L ∘ … ∘ σ ∘ T_1` with a single output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluNet<T> {
    input_dim: usize,
    layers: Vec<Layer<T>>,
}

/// Per-hidden-neuron activity; `true` means preactivation `> 0` (ε = +1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationPattern {
    layers: Vec<Vec<bool>>,
}

impl ActivationPattern {
    pub fn new(layers: Vec<Vec<bool>>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[Vec<bool>] {
        &self.layers
    }

    /// The same pattern as `±1` signs.
    pub fn signs(&self) -> Vec<Vec<i8>> {
        self.layers
            .iter()
            .map(|l| l.iter().map(|&a| if a { 1 } else { -1 }).collect())
            .collect()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// Stable 64-bit FNV-1a digest of the pattern bits.
    pub fn digest(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for layer in &self.layers {
            for &bit in layer {
                h ^= u64::from(bit) + 1;
                h = h.wrapping_mul(PRIME);
            }
            h ^= 0xff;
            h = h.wrapping_mul(PRIME);
        }
        h
    }

    pub fn differing_bits(&self, other: &Self) -> usize {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count())
            .sum()
    }
}

/// Cached forward pass over a batch: per hidden layer, the preactivations
/// `z_k` and activations `a_k = relu(z_k)`; `a_0` is the input.
pub(crate) struct ForwardTrace<T> {
    pub activations: Vec<Matrix<T>>,
    pub preactivations: Vec<Matrix<T>>,
    pub output: Vec<T>,
}

impl<T: Real> ReluNet<T> {
    /// Assembles a network from explicit layers; the shapes must chain and
    /// the last layer must have a single output.
    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return invalid("a network needs at least one layer");
        };
        let input_dim = first.in_dim();
        if input_dim == 0 {
            return invalid("zero input dimension");
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return invalid(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    k + 1,
                    pair[0].out_dim(),
                    k + 2,
                    pair[1].in_dim()
                ));
            }
        }
        if layers.iter().any(|l| l.out_dim() == 0) {
            return invalid("zero-width layer");
        }
        if layers.last().map(Layer::out_dim) != Some(1) {
            return invalid("the output layer must have a single neuron");
        }
        Ok(Self { input_dim, layers })
    }

    /// Seeded initialization for widths `[d, d_1, …, d_L, 1]`.
    pub fn init(widths: &[usize], seed: u64, scheme: InitScheme) -> Result<Self> {
        if widths.len() < 2 {
            return invalid("widths need at least input and output sizes");
        }
        if widths.contains(&0) {
            return invalid("zero-width layer");
        }
        if *widths.last().unwrap() != 1 {
            return invalid("the output layer must have a single neuron");
        }
        if let InitScheme::FixedScale(s) = scheme {
            if !(s > 0.0 && s.is_finite()) {
                return invalid("fixed init scale must be positive");
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = match scheme {
                    InitScheme::UniformFanIn => 1.0 / (fan_in as f64).sqrt(),
                    InitScheme::FixedScale(s) => s,
                };
                let mut draw = || T::lit(rng.random_range(-bound..=bound));
                let weight = Matrix::from_fn(fan_out, fan_in, |_, _| draw());
                let bias = (0..fan_out).map(|_| draw()).collect();
                Layer { weight, bias }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `[d, d_1, …, d_L, 1]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(Layer::out_dim))
            .collect()
    }

    /// Hidden widths `[d_1, …, d_L]`.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::out_dim)
            .collect()
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Parameter blocks in flattening order: each layer's row-major weights,
    /// then its bias.
    pub fn param_blocks(&self) -> impl Iterator<Item = &[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
    }

    pub fn param_blocks_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn flat_params(&self) -> Vec<T> {
        self.param_blocks().flatten().copied().collect()
    }

    pub fn with_flat_params(&self, flat: &[T]) -> Result<Self> {
        if flat.len() != self.num_params() {
            return invalid(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            ));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite parameter");
        }
        let mut out = self.clone();
        let mut offset = 0;
        for block in out.param_blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(out)
    }

    /// `‖θ‖_∞` over all weights and biases.
    pub fn max_abs_param(&self) -> T {
        self.param_blocks()
            .flatten()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn param_norm(&self) -> T {
        self.param_blocks()
            .flatten()
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.param_blocks().flatten().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim {
            return invalid(format!(
                "input of dimension {} for a network over R^{}",
                x.len(),
                self.input_dim
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weight.matvec(&h)?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += *bi;
                if k < last {
                    *zi = zi.max(T::zero());
                }
            }
            h = z;
        }
        Ok(h[0])
    }

    /// Forward pass over the rows of `x` (`n × d`).
    pub fn forward_batch(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        Ok(self.forward_trace(x)?.output)
    }

    pub(crate) fn forward_trace(&self, x: &Matrix<T>) -> Result<ForwardTrace<T>> {
        if x.cols() != self.input_dim {
            return invalid(format!(
                "batch with {} columns for a network over R^{}",
                x.cols(),
                self.input_dim
            ));
        }
        let n = x.rows();
        let mut activations = vec![x.clone()];
        let mut preactivations = Vec::with_capacity(self.depth());
        let mut output = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Matrix::zeros(n, layer.out_dim());
            for i in 0..n {
                z.row_mut(i).copy_from_slice(&layer.bias);
            }
            gemm(T::one(), &activations[k], Op::N, &layer.weight, Op::T, T::one(), &mut z);
            if k + 1 == self.layers.len() {
                output = z.into_vec();
            } else {
                let a = z.map(|v| v.max(T::zero()));
                preactivations.push(z);
                activations.push(a);
            }
        }
        Ok(ForwardTrace {
            activations,
            preactivations,
            output,
        })
    }

    /// Sign of every hidden preactivation at `x`; exact zeros count as inactive.
    pub fn activation_pattern(&self, x: &[T]) -> Result<ActivationPattern> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        let mut layers = Vec::with_capacity(self.depth());
        for layer in &self.layers[..self.layers.len() - 1] {
            let mut z = layer.weight.matvec(&h)?;
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += *bi;
            }
            layers.push(z.iter().map(|&v| v > T::zero()).collect());
            h = z.into_iter().map(|v| v.max(T::zero())).collect();
        }
        Ok(ActivationPattern { layers })
    }

    /// `θ + δ·û` with `û` a uniformly random unit vector (normalized Gaussian).
    pub fn perturb(&self, delta: T, seed: u64) -> Result<Self> {
        if !(delta >= T::zero()) {
            return invalid("perturbation magnitude must be non-negative");
        }
        if delta == T::zero() {
            return Ok(self.clone());
        }
        let p = self.num_params();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut out = self.clone();
        let mut it = dir.into_iter();
        for block in out.param_blocks_mut() {
            for v in block.iter_mut() {
                *v += delta * T::lit(it.next().unwrap() / norm);
            }
        }
        Ok(out)
    }

    /// Clamps every parameter into `[−k, k]`.
    pub fn weight_clip(&self, k: T) -> Result<Self> {
        let mut out = self.clone();
        out.clip_in_place(k)?;
        Ok(out)
    }

    pub fn clip_in_place(&mut self, k: T) -> Result<()> {
        if !(k > T::zero()) {
            return invalid("weight clip must be positive");
        }
        for block in self.param_blocks_mut() {
            for v in block.iter_mut() {
                *v = v.max(-k).min(k);
            }
        }
        Ok(())
    }

    /// Per-layer spectral norms `‖W^{(k)}‖` by power iteration.
    pub fn layer_spectral_norms(&self, iterations: usize) -> Result<Vec<T>> {
        self.layers
            .iter()
            .map(|l| spectral_norm(&l.weight, iterations))
            .collect()
    }

    pub(crate) fn zero_gradients(&self) -> Vec<Layer<T>> {
        self.layers.iter().map(Layer::zeros_like).collect()
    }
}
