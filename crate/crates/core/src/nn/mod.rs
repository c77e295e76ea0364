//! Small differentiable-network toolkit in `f64`: dense layers with cached
//! forward tapes, a gated recurrent cell, Adam, and finite-difference checks.
//!
//! Every model stores its parameters in one flat vector, so optimizers,
//! target-network soft updates, checkpoints and gradient checks all operate
//! on plain slices.

mod adam;
mod checkpoint;
mod dense;
pub mod gradcheck;
mod gru;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, Manifest};
pub use dense::{Backward, LayerSpec, Net, Tape};
pub use gru::{GruCell, GruTape};

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("layer {0} input does not match previous layer output")]
    LayerChain(usize),
    #[error("backward called before forward")]
    NoForward,
    #[error("non-finite parameter after update")]
    NonFinite,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Anything trained through a flat parameter vector.
pub trait Parameterized {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    fn param_count(&self) -> usize {
        self.params().len()
    }

    /// `self ← (1 − τ)·self + τ·source`, elementwise.
    fn soft_update_from(&mut self, source: &Self, tau: f64) {
        for (t, s) in self.params_mut().iter_mut().zip(source.params()) {
            *t = (1.0 - tau) * *t + tau * s;
        }
    }

    fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
    }
}

/// Uniform(−1/√fan_in, 1/√fan_in) fill.
pub(crate) fn init_uniform(out: &mut [f64], fan_in: usize, rng: &mut impl Rng) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    for p in out {
        *p = rng.random_range(-bound..bound);
    }
}
