use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Sinusoidal position table of shape `[t, d]`:
/// `PE[t, 2i] = sin(t / 10000^(2i/d))`, `PE[t, 2i+1] = cos(t / 10000^(2i/d))`.
pub fn positional_encoding(t: usize, d: usize) -> Result<Tensor> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Config(format!(
            "positional encoding width must be even and positive, got {d}"
        )));
    }
    if t == 0 {
        return Err(Error::Empty {
            op: "positional_encoding",
        });
    }
    let mut pe = Tensor::zeros(&[t, d]);
    let data = pe.data_mut();
    for pos in 0..t {
        for i in 0..d / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            data[pos * d + 2 * i] = angle.sin();
            data[pos * d + 2 * i + 1] = angle.cos();
        }
    }
    Ok(pe)
}
