use crate::error::{Error, Result};
use crate::numerics::Tensor;

use super::Parameter;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Normalizes each trailing-dimension vector to zero mean and unit variance,
/// then applies a learned per-feature scale and shift.
#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: Parameter,
    pub beta: Parameter,
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct LayerNormCache {
    normalized: Tensor,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(name: &str, width: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Config(format!("layer norm eps must be > 0, got {eps}")));
        }
        Ok(LayerNorm {
            gamma: Parameter::new(format!("{name}.gamma"), Tensor::filled(&[width], 1.0)),
            beta: Parameter::new(format!("{name}.beta"), Tensor::zeros(&[width])),
            eps,
        })
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.gamma, &mut self.beta]
    }

    pub fn params(&self) -> [&Parameter; 2] {
        [&self.gamma, &self.beta]
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, LayerNormCache)> {
        let d = self.width();
        if x.last_dim() != d {
            return Err(Error::shape(
                "layer_norm_forward",
                format!("input {:?} vs width {d}", x.shape()),
            ));
        }
        let rows = x.leading();
        let mut normalized = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        let mut inv_std = Vec::with_capacity(rows);
        let (gamma, beta) = (self.gamma.value.data(), self.beta.value.data());
        for ((xr, nr), or) in x
            .data()
            .chunks_exact(d)
            .zip(normalized.chunks_exact_mut(d))
            .zip(out.chunks_exact_mut(d))
        {
            let mean = xr.iter().sum::<f64>() / d as f64;
            let var = xr.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + self.eps).sqrt();
            inv_std.push(is);
            for j in 0..d {
                nr[j] = (xr[j] - mean) * is;
                or[j] = nr[j] * gamma[j] + beta[j];
            }
        }
        let y = Tensor::from_parts(x.shape().to_vec(), out);
        y.ensure_finite("layer_norm_forward")?;
        Ok((
            y,
            LayerNormCache {
                normalized: Tensor::from_parts(x.shape().to_vec(), normalized),
                inv_std,
            },
        ))
    }

    pub fn backward(&mut self, dy: &Tensor, cache: &LayerNormCache) -> Result<Tensor> {
        let d = self.width();
        if dy.shape() != cache.normalized.shape() {
            return Err(Error::shape(
                "layer_norm_backward",
                format!("dy {:?} vs cache {:?}", dy.shape(), cache.normalized.shape()),
            ));
        }
        let gamma = self.gamma.value.data();
        let mut dx = vec![0.0; dy.len()];
        let mut dgamma = vec![0.0; d];
        let mut dbeta = vec![0.0; d];
        let mut dxhat = vec![0.0; d];
        for (((dyr, nr), dxr), &is) in dy
            .data()
            .chunks_exact(d)
            .zip(cache.normalized.data().chunks_exact(d))
            .zip(dx.chunks_exact_mut(d))
            .zip(&cache.inv_std)
        {
            let mut sum = 0.0;
            let mut sum_xhat = 0.0;
            for j in 0..d {
                dgamma[j] += dyr[j] * nr[j];
                dbeta[j] += dyr[j];
                dxhat[j] = dyr[j] * gamma[j];
                sum += dxhat[j];
                sum_xhat += dxhat[j] * nr[j];
            }
            let scale = is / d as f64;
            for j in 0..d {
                dxr[j] = scale * (d as f64 * dxhat[j] - sum - nr[j] * sum_xhat);
            }
        }
        for (g, v) in self.gamma.grad.data_mut().iter_mut().zip(&dgamma) {
            *g += v;
        }
        for (g, v) in self.beta.grad.data_mut().iter_mut().zip(&dbeta) {
            *g += v;
        }
        Ok(Tensor::from_parts(dy.shape().to_vec(), dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;

    #[test]
    fn constant_row_maps_to_zero() {
        let ln = LayerNorm::new("ln", 4, DEFAULT_EPS).unwrap();
        let (y, _) = ln.forward(&Tensor::filled(&[1, 1, 4], 3.0)).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardized_row_is_unchanged() {
        let ln = LayerNorm::new("ln", 2, DEFAULT_EPS).unwrap();
        let x = Tensor::new(vec![1, 1, 2], vec![1.0, -1.0]).unwrap();
        let (y, _) = ln.forward(&x).unwrap();
        // eps perturbs the unit variance slightly
        assert!(y.max_abs_diff(&x) < 1e-5);
    }

    #[test]
    fn matches_direct_formula() {
        let mut r = rng(11);
        let mut ln = LayerNorm::new("ln", 5, DEFAULT_EPS).unwrap();
        ln.gamma.value = random(&[5], &mut r);
        ln.beta.value = random(&[5], &mut r);
        let x = random(&[2, 3, 5], &mut r);
        let (y, _) = ln.forward(&x).unwrap();
        for (row, out) in x.data().chunks(5).zip(y.data().chunks(5)) {
            let mean: f64 = row.iter().sum::<f64>() / 5.0;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 5.0;
            for j in 0..5 {
                let expected = (row[j] - mean) / (var + DEFAULT_EPS).sqrt() * ln.gamma.value.data()[j]
                    + ln.beta.value.data()[j];
                assert!((out[j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_input_gradient() {
        let mut r = rng(12);
        let mut ln = LayerNorm::new("ln", 4, DEFAULT_EPS).unwrap();
        let (_, cache) = ln.forward(&random(&[2, 4], &mut r)).unwrap();
        let dx = ln.backward(&Tensor::zeros(&[2, 4]), &cache).unwrap();
        assert!(dx.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_feature_has_no_input_gradient() {
        let mut r = rng(13);
        let mut ln = LayerNorm::new("ln", 1, DEFAULT_EPS).unwrap();
        let (y, cache) = ln.forward(&random(&[3, 1], &mut r)).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        let dx = ln.backward(&random(&[3, 1], &mut r), &cache).unwrap();
        assert!(dx.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng(14);
        let mut ln = LayerNorm::new("ln", 6, DEFAULT_EPS).unwrap();
        ln.gamma.value = random(&[6], &mut r);
        ln.beta.value = random(&[6], &mut r);
        let x = random(&[2, 3, 6], &mut r);
        let w = random(&[2, 3, 6], &mut r);
        let (_, cache) = ln.forward(&x).unwrap();
        let dx = ln.backward(&w, &cache).unwrap();
        let loss = |l: &LayerNorm, x: &Tensor| weighted_sum(&l.forward(x).unwrap().0, &w);

        let fd_x = central_differences(x.len(), |i, h| loss(&ln, &perturbed(&x, i, h)));
        assert!(rel_err(dx.data(), &fd_x) < 1e-6);
        let fd_g = central_differences(6, |i, h| {
            let mut p = ln.clone();
            p.gamma.value = perturbed(&p.gamma.value, i, h);
            loss(&p, &x)
        });
        assert!(rel_err(ln.gamma.grad.data(), &fd_g) < 1e-6);
        let fd_b = central_differences(6, |i, h| {
            let mut p = ln.clone();
            p.beta.value = perturbed(&p.beta.value, i, h);
            loss(&p, &x)
        });
        assert!(rel_err(ln.beta.grad.data(), &fd_b) < 1e-6);
    }

    #[test]
    fn mismatched_cache_is_rejected() {
        let mut r = rng(15);
        let mut ln = LayerNorm::new("ln", 4, DEFAULT_EPS).unwrap();
        let (_, cache) = ln.forward(&random(&[2, 4], &mut r)).unwrap();
        assert!(ln.backward(&Tensor::zeros(&[3, 4]), &cache).is_err());
        assert!(LayerNorm::new("ln", 4, 0.0).is_err());
    }
}
