//! Differentiable layers with explicit forward and backward passes.
//!
//! Each layer owns its [`Parameter`]s. `forward` takes `&self` and returns the
//! output together with a cache of intermediates; `backward` takes that cache
//! and an upstream gradient, accumulates parameter gradients into the layer,
//! and returns the gradient with respect to the layer input.

mod dense;
mod fourier_mix;
mod gru;
pub mod init;
mod layer_norm;
mod loss;
mod positional;

pub use dense::{Dense, DenseCache};
pub use fourier_mix::{FourierMix, FourierMixCache, MixMode};
pub use gru::{Gru, GruCellCache, GruSequence, GruSequenceCache};
pub use layer_norm::{LayerNorm, LayerNormCache, DEFAULT_EPS};
pub use loss::mse_loss;
pub use positional::positional_encoding;

use crate::numerics::Tensor;

/// A learnable tensor together with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}
