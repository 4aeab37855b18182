use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{kernels, Tensor};

use super::{init, Parameter};

/// Affine map `y = x·W + b` applied over the trailing dimension.
#[derive(Clone, Debug)]
pub struct Dense {
    /// `[in, out]`
    pub weight: Parameter,
    /// `[out]`
    pub bias: Parameter,
}

#[derive(Clone, Debug)]
pub struct DenseCache {
    input: Tensor,
}

impl Dense {
    pub fn new(name: &str, weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.ndim() != 2 || bias.ndim() != 1 || bias.len() != weight.shape()[1] {
            return Err(Error::shape(
                "dense",
                format!("weight {:?}, bias {:?}", weight.shape(), bias.shape()),
            ));
        }
        Ok(Dense {
            weight: Parameter::new(format!("{name}.weight"), weight),
            bias: Parameter::new(format!("{name}.bias"), bias),
        })
    }

    /// Xavier-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(name: &str, fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let w = init::xavier_uniform(rng, &[fan_in, fan_out], fan_in, fan_out);
        Self::new(name, w, Tensor::zeros(&[fan_out])).expect("consistent shapes")
    }

    pub fn in_features(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn params(&self) -> [&Parameter; 2] {
        [&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.weight, &mut self.bias]
    }

    /// Output only, without keeping a cache.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        if x.last_dim() != self.in_features() {
            return Err(Error::shape(
                "dense_forward",
                format!("input {:?} vs weight {:?}", x.shape(), self.weight.value.shape()),
            ));
        }
        let (rows, fin, fout) = (x.leading(), self.in_features(), self.out_features());
        let mut out = vec![0.0; rows * fout];
        kernels::gemm(x.data(), self.weight.value.data(), &mut out, rows, fin, fout, false);
        kernels::add_row_bias(&mut out, self.bias.value.data());
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = fout;
        let y = Tensor::from_parts(shape, out);
        y.ensure_finite("dense_forward")?;
        Ok(y)
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, DenseCache)> {
        let y = self.infer(x)?;
        Ok((y, DenseCache { input: x.clone() }))
    }

    /// `dx = dy·Wᵀ`; accumulates `dW += xᵀ·dy` and `db += Σ_rows dy`.
    pub fn backward(&mut self, dy: &Tensor, cache: &DenseCache) -> Result<Tensor> {
        let x = &cache.input;
        let (rows, fin, fout) = (x.leading(), self.in_features(), self.out_features());
        if x.last_dim() != fin || dy.last_dim() != fout || dy.leading() != rows {
            return Err(Error::shape(
                "dense_backward",
                format!("dy {:?} vs cached input {:?}", dy.shape(), x.shape()),
            ));
        }
        kernels::gemm_at_b(x.data(), dy.data(), self.weight.grad.data_mut(), rows, fin, fout, true);
        kernels::accumulate_column_sums(dy.data(), self.bias.grad.data_mut());
        let mut dx = vec![0.0; rows * fin];
        kernels::gemm_a_bt(dy.data(), self.weight.value.data(), &mut dx, rows, fout, fin, false);
        Ok(Tensor::from_parts(x.shape().to_vec(), dx))
    }
}
