use super::{Gradients, ReluNet};
use crate::error::{invalid, Result};
use crate::numeric::Real;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> Default for AdamConfig<T> {
    fn default() -> Self {
        Self {
            lr: T::lit(3e-4),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }
}

impl<T: Real> AdamConfig<T> {
    pub fn with_lr(lr: T) -> Self {
        Self { lr, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |b: T| b >= T::zero() && b < T::one();
        if !(self.lr > T::zero() && self.lr.is_finite()) {
            return invalid("learning rate must be positive and finite");
        }
        if !unit(self.beta1) || !unit(self.beta2) {
            return invalid("Adam betas must lie in [0, 1)");
        }
        if !(self.eps > T::zero()) {
            return invalid("Adam epsilon must be positive");
        }
        Ok(())
    }
}

/// Moment accumulators for every parameter, flattened in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig<T>,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig<T>, num_params: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            m: vec![T::zero(); num_params],
            v: vec![T::zero(); num_params],
            t: 0,
        })
    }

    pub fn for_net(config: AdamConfig<T>, net: &ReluNet<T>) -> Result<Self> {
        Self::new(config, net.num_params())
    }
}

/// One bias-corrected Adam update of `net` in place.
pub fn adam_step<T: Real>(
    net: &mut ReluNet<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
) -> Result<()> {
    let p = net.num_params();
    let gp: usize = grads.blocks().map(<[T]>::len).sum();
    if gp != p || state.m.len() != p || state.v.len() != p {
        return invalid(format!(
            "Adam shapes disagree: {p} parameters, {gp} gradients, {} moments",
            state.m.len()
        ));
    }
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let c1 = T::one() - beta1.powi(t);
    let c2 = T::one() - beta2.powi(t);
    let mut i = 0;
    for (block, g_block) in net.param_blocks_mut().zip(grads.blocks()) {
        for (w, &g) in block.iter_mut().zip(g_block) {
            let m = &mut state.m[i];
            let v = &mut state.v[i];
            *m = beta1 * *m + (T::one() - beta1) * g;
            *v = beta2 * *v + (T::one() - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
            i += 1;
        }
    }
    Ok(())
}
