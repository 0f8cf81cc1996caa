use std::str::FromStr;

use super::{ForwardTrace, Layer, ReluNet};
use crate::error::{invalid, Error, Result};
use crate::numeric::{gemm, Matrix, Op, Real};

/// Training objective, averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    /// `(1/n) Σ (f − y)²`.
    Mse,
    /// `(1/n) Σ [max(f,0) − f·y + ln(1 + e^{−|f|})]`: cross-entropy of
    /// `sigmoid(f)` against labels in `[0,1]`.
    BceWithLogits,
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Loss::Mse),
            "bce" | "bce_with_logits" | "bce-with-logits" => Ok(Loss::BceWithLogits),
            other => invalid(format!("unknown loss `{other}`")),
        }
    }
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::Mse => "mse",
            Loss::BceWithLogits => "bce_with_logits",
        }
    }

    /// Mean loss of predictions against targets.
    pub fn value<T: Real>(self, pred: &[T], target: &[T]) -> T {
        let n = T::from_usize_lossy(pred.len().max(1));
        let total: T = pred
            .iter()
            .zip(target)
            .map(|(&f, &y)| match self {
                Loss::Mse => (f - y) * (f - y),
                Loss::BceWithLogits => {
                    f.max(T::zero()) - f * y + (-f.abs()).exp().ln_1p()
                }
            })
            .sum();
        total / n
    }

    /// `∂(mean loss)/∂f_i` for every sample.
    pub fn output_gradient<T: Real>(self, pred: &[T], target: &[T]) -> Vec<T> {
        let n = T::from_usize_lossy(pred.len().max(1));
        pred.iter()
            .zip(target)
            .map(|(&f, &y)| match self {
                Loss::Mse => T::lit(2.0) * (f - y) / n,
                Loss::BceWithLogits => (sigmoid(f) - y) / n,
            })
            .collect()
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Gradient of the mean loss, laid out like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Layer<T>>,
    /// Loss at the parameters where the gradient was taken.
    pub loss: T,
    /// Predictions at those parameters.
    pub predictions: Vec<T>,
}

impl<T: Real> Gradients<T> {
    pub fn blocks(&self) -> impl Iterator<Item = &[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
    }

    pub fn flat(&self) -> Vec<T> {
        self.blocks().flatten().copied().collect()
    }

    pub fn norm(&self) -> T {
        self.blocks().flatten().map(|&g| g * g).sum::<T>().sqrt()
    }
}

impl<T: Real> ReluNet<T> {
    /// Exact gradient of the mean loss over the rows of `x`. The ReLU
    /// derivative at a zero preactivation is taken as 0.
    pub fn backward(&self, x: &Matrix<T>, y: &[T], loss: Loss) -> Result<Gradients<T>> {
        if x.rows() == 0 {
            return invalid("empty batch");
        }
        if y.len() != x.rows() {
            return invalid(format!("{} targets for {} inputs", y.len(), x.rows()));
        }
        let trace = self.forward_trace(x)?;
        let g = loss.output_gradient(&trace.output, y);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite output gradient; the network has diverged".into()));
        }
        let layers = self.backprop(&trace, g);
        Ok(Gradients {
            layers,
            loss: loss.value(&trace.output, y),
            predictions: trace.output,
        })
    }

    /// Propagates `∂L/∂f` (one value per sample) back through the cached pass.
    fn backprop(&self, trace: &ForwardTrace<T>, output_grad: Vec<T>) -> Vec<Layer<T>> {
        let n = output_grad.len();
        let mut grads = self.zero_gradients();
        let mut delta = Matrix::new(n, 1, output_grad).expect("finite output gradient");
        for k in (0..self.layers.len()).rev() {
            let a_prev = &trace.activations[k];
            gemm(T::one(), &delta, Op::T, a_prev, Op::N, T::zero(), &mut grads[k].weight);
            for i in 0..n {
                for (gb, &d) in grads[k].bias.iter_mut().zip(delta.row(i)) {
                    *gb += d;
                }
            }
            if k == 0 {
                break;
            }
            let mut prev = Matrix::zeros(n, self.layers[k].in_dim());
            gemm(T::one(), &delta, Op::N, &self.layers[k].weight, Op::N, T::zero(), &mut prev);
            let z = &trace.preactivations[k - 1];
            for (d, &zv) in prev.as_mut_slice().iter_mut().zip(z.as_slice()) {
                if zv <= T::zero() {
                    *d = T::zero();
                }
            }
            delta = prev;
        }
        grads
    }

    /// Per-sample gradient `∂f(x_i)/∂θ_j` of the raw output with respect to
    /// the `param`-th flattened parameter, for every row of `x`.
    pub fn output_param_gradient(&self, x: &Matrix<T>, param: usize) -> Result<Vec<T>> {
        if param >= self.num_params() {
            return invalid(format!(
                "parameter index {param} out of range for {} parameters",
                self.num_params()
            ));
        }
        // locate the layer and block holding the parameter
        let mut offset = 0;
        let mut target = None;
        for (k, layer) in self.layers.iter().enumerate() {
            let nw = layer.weight.as_slice().len();
            if param < offset + nw {
                let local = param - offset;
                target = Some((k, Parameter::Weight(local / layer.in_dim(), local % layer.in_dim())));
                break;
            }
            offset += nw;
            if param < offset + layer.bias.len() {
                target = Some((k, Parameter::Bias(param - offset)));
                break;
            }
            offset += layer.bias.len();
        }
        let (layer_idx, which) = target.expect("index checked above");
        let trace = self.forward_trace(x)?;
        let n = x.rows();
        // δ_k(i, r) = ∂f(x_i)/∂z_k(r), pushed down to the wanted layer
        let mut delta = Matrix::new(n, 1, vec![T::one(); n]).expect("finite");
        for k in ((layer_idx + 1)..self.layers.len()).rev() {
            let mut prev = Matrix::zeros(n, self.layers[k].in_dim());
            gemm(T::one(), &delta, Op::N, &self.layers[k].weight, Op::N, T::zero(), &mut prev);
            let z = &trace.preactivations[k - 1];
            for (d, &zv) in prev.as_mut_slice().iter_mut().zip(z.as_slice()) {
                if zv <= T::zero() {
                    *d = T::zero();
                }
            }
            delta = prev;
        }
        let a_prev = &trace.activations[layer_idx];
        Ok(match which {
            Parameter::Weight(r, c) => (0..n).map(|i| delta.get(i, r) * a_prev.get(i, c)).collect(),
            Parameter::Bias(r) => (0..n).map(|i| delta.get(i, r)).collect(),
        })
    }
}

enum Parameter {
    Weight(usize, usize),
    Bias(usize),
}
