use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.len() != target.len() {
        return Err(Error::shape(
            "mse_loss",
            format!("{} predictions vs {} targets", pred.len(), target.len()),
        ));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    for ((g, p), t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let r = p - t;
        loss += r * r;
        *g = 2.0 * r / n;
    }
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite { op: "mse_loss" });
    }
    Ok((loss, grad))
}
