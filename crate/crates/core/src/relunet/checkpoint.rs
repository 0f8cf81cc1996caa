use serde::{Deserialize, Serialize};

use super::{Layer, ReluNet};
use crate::error::{Error, Result};
use crate::numeric::{Matrix, Real};

pub const CHECKPOINT_FORMAT: &str = "relunet";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk network description. Floats are written as shortest round-trip
/// decimals, so `f64` (and `f32`, widened) parameters survive exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub layers: Vec<CheckpointLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointLayer {
    /// Row-major `out × in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl<T: Real> ReluNet<T> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            input_dim: self.input_dim,
            widths: self.widths(),
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    weights: l.weight.as_slice().iter().map(|v| v.as_f64()).collect(),
                    bias: l.bias.iter().map(|v| v.as_f64()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("unexpected format tag `{}`", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", ck.version)));
        }
        if ck.widths.len() != ck.layers.len() + 1 || ck.widths.first() != Some(&ck.input_dim) {
            return Err(Error::Format("widths do not match the layer list".into()));
        }
        let layers = ck
            .widths
            .windows(2)
            .zip(&ck.layers)
            .map(|(w, l)| {
                let weight = Matrix::new(w[1], w[0], l.weights.iter().map(|&v| T::lit(v)).collect())?;
                Layer::new(weight, l.bias.iter().map(|&v| T::lit(v)).collect())
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Format(format!("bad layer: {e}")))?;
        Self::from_layers(layers).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_checkpoint()).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_checkpoint(&ck)
    }
}
