//! Finite-difference helpers shared by the unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::Tensor;

pub const STEP: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

/// Central differences of `loss(i, delta)`, the loss with entry `i` shifted by
/// `delta`, for `i in 0..n`.
pub fn central_differences(n: usize, loss: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    (0..n)
        .map(|i| (loss(i, STEP) - loss(i, -STEP)) / (2.0 * STEP))
        .collect()
}

/// Norm-wise relative error `‖a − b‖ / max(‖a‖, ‖b‖)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = na.max(nb);
    if denom == 0.0 {
        0.0
    } else {
        diff / denom
    }
}

/// `Σ w ⊙ y`, the scalar used to turn a tensor output into a loss.
pub fn weighted_sum(y: &Tensor, w: &Tensor) -> f64 {
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

pub fn perturbed(t: &Tensor, i: usize, delta: f64) -> Tensor {
    let mut out = t.clone();
    out.data_mut()[i] += delta;
    out
}
