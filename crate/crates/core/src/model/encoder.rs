use rand::Rng;

use crate::error::Result;
use crate::nn::{Dense, DenseCache, FourierMix, FourierMixCache, LayerNorm, LayerNormCache, MixMode, Parameter, DEFAULT_EPS};
use crate::numerics::{kernels, Tensor};

/// Pre-norm encoder block:
/// `h = x + mix(norm(x))`, `out = h + ffn(norm(h))` with a tanh feed-forward.
#[derive(Clone, Debug)]
pub struct EncoderLayer {
    pub norm_mix: LayerNorm,
    pub mix: FourierMix,
    pub norm_ffn: LayerNorm,
    pub ffn_in: Dense,
    pub ffn_out: Dense,
}

#[derive(Clone, Debug)]
pub struct EncoderCache {
    norm_mix: LayerNormCache,
    mix: FourierMixCache,
    norm_ffn: LayerNormCache,
    ffn_in: DenseCache,
    activated: Tensor,
    ffn_out: DenseCache,
}

impl EncoderLayer {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        seq_len: usize,
        width: usize,
        heads: usize,
        ffn_width: usize,
        mode: MixMode,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(EncoderLayer {
            norm_mix: LayerNorm::new(&format!("{name}.norm_mix"), width, DEFAULT_EPS)?,
            mix: FourierMix::new(&format!("{name}.mix"), seq_len, width, heads, mode, rng)?,
            norm_ffn: LayerNorm::new(&format!("{name}.norm_ffn"), width, DEFAULT_EPS)?,
            ffn_in: Dense::init(&format!("{name}.ffn_in"), width, ffn_width, rng),
            ffn_out: Dense::init(&format!("{name}.ffn_out"), ffn_width, width, rng),
        })
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        out.extend(self.norm_mix.params());
        out.extend(self.mix.params());
        out.extend(self.norm_ffn.params());
        out.extend(self.ffn_in.params());
        out.extend(self.ffn_out.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        out.extend(self.norm_mix.params_mut());
        out.extend(self.mix.params_mut());
        out.extend(self.norm_ffn.params_mut());
        out.extend(self.ffn_in.params_mut());
        out.extend(self.ffn_out.params_mut());
        out
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, EncoderCache)> {
        let (a, norm_mix) = self.norm_mix.forward(x)?;
        let (m, mix) = self.mix.forward(&a)?;
        let mut h = x.clone();
        h.add_assign(&m)?;
        let (b, norm_ffn) = self.norm_ffn.forward(&h)?;
        let (f, ffn_in) = self.ffn_in.forward(&b)?;
        let activated = Tensor::from_fn(f.shape(), |i| kernels::tanh(f.data()[i]));
        let (f2, ffn_out) = self.ffn_out.forward(&activated)?;
        h.add_assign(&f2)?;
        Ok((
            h,
            EncoderCache {
                norm_mix,
                mix,
                norm_ffn,
                ffn_in,
                activated,
                ffn_out,
            },
        ))
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let (a, _) = self.norm_mix.forward(x)?;
        let mut h = x.clone();
        h.add_assign(&self.mix.infer(&a)?)?;
        let (b, _) = self.norm_ffn.forward(&h)?;
        let mut f = self.ffn_in.infer(&b)?;
        for v in f.data_mut() {
            *v = kernels::tanh(*v);
        }
        h.add_assign(&self.ffn_out.infer(&f)?)?;
        Ok(h)
    }

    pub fn backward(&mut self, dy: &Tensor, cache: &EncoderCache) -> Result<Tensor> {
        let mut dact = self.ffn_out.backward(dy, &cache.ffn_out)?;
        for (d, a) in dact.data_mut().iter_mut().zip(cache.activated.data()) {
            *d *= 1.0 - a * a;
        }
        let db = self.ffn_in.backward(&dact, &cache.ffn_in)?;
        let mut dh = dy.clone();
        dh.add_assign(&self.norm_ffn.backward(&db, &cache.norm_ffn)?)?;
        let da = self.mix.backward(&dh, &cache.mix)?;
        let mut dx = dh;
        dx.add_assign(&self.norm_mix.backward(&da, &cache.norm_mix)?)?;
        Ok(dx)
    }
}
