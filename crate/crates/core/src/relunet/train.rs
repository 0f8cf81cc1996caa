use super::{adam_step, AdamConfig, AdamState, Loss, ReluNet};
use crate::error::{invalid, Error, Result};
use crate::numeric::{Matrix, Real};

/// Full-batch training schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<T> {
    pub steps: usize,
    pub eval_every: usize,
    pub loss: Loss,
    pub adam: AdamConfig<T>,
    /// Clamp every parameter into `[−K, K]` after each update.
    pub weight_clip: Option<T>,
}

impl<T: Real> TrainConfig<T> {
    pub fn new(steps: usize, eval_every: usize, loss: Loss) -> Self {
        Self {
            steps,
            eval_every,
            loss,
            adam: AdamConfig::default(),
            weight_clip: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return invalid("training needs at least one step");
        }
        if self.eval_every == 0 {
            return invalid("eval_every must be at least 1");
        }
        if let Some(k) = self.weight_clip {
            if !(k > T::zero()) {
                return invalid("weight clip must be positive");
            }
        }
        self.adam.validate()
    }
}

/// Snapshot handed to the evaluation callback.
pub struct EvalEvent<'a, T> {
    /// Number of updates applied so far.
    pub step: usize,
    pub net: &'a ReluNet<T>,
    /// Network output on the training inputs.
    pub predictions: &'a [T],
    pub loss: T,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub net: ReluNet<T>,
    /// Training loss before every update and after the last one
    /// (`steps + 1` entries).
    pub losses: Vec<T>,
}

/// Runs `config.steps` Adam updates on the full batch `(x, y)`. The callback
/// sees the state at step 0 and after every `eval_every` updates; an error
/// from it aborts training. A non-finite loss aborts with a numeric error
/// naming the step.
pub fn train_full_batch<T: Real>(
    net: ReluNet<T>,
    x: &Matrix<T>,
    y: &[T],
    config: &TrainConfig<T>,
    mut on_eval: impl FnMut(&EvalEvent<'_, T>) -> Result<()>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if x.rows() == 0 {
        return invalid("empty dataset");
    }
    if y.len() != x.rows() {
        return invalid(format!("{} targets for {} inputs", y.len(), x.rows()));
    }
    let mut net = net;
    let mut state = AdamState::for_net(config.adam, &net)?;
    let mut losses = Vec::with_capacity(config.steps + 1);
    for step in 0..=config.steps {
        let (loss, predictions, grads) = if step < config.steps {
            let g = net.backward(x, y, config.loss).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("{m} (step {step})")),
                e => e,
            })?;
            (g.loss, g.predictions.clone(), Some(g))
        } else {
            let p = net.forward_batch(x)?;
            (config.loss.value(&p, y), p, None)
        };
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss at step {step}")));
        }
        losses.push(loss);
        if step % config.eval_every == 0 || step == config.steps {
            on_eval(&EvalEvent {
                step,
                net: &net,
                predictions: &predictions,
                loss,
            })?;
        }
        if let Some(g) = grads {
            adam_step(&mut net, &g, &mut state)?;
            if let Some(k) = config.weight_clip {
                net.clip_in_place(k)?;
            }
            if !net.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite parameters after step {}",
                    step + 1
                )));
            }
        }
    }
    Ok(TrainOutcome { net, losses })
}
