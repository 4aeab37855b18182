//! Token mixing along the time axis in the frequency domain.
//!
//! The channel dimension is split into `heads` groups. Every channel's time
//! series is taken to the real-input spectrum, multiplied bin-wise by its
//! head's complex filter, and brought back to the time domain. A dense
//! projection over channels follows.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{FftPlan, Tensor};

use super::{Dense, DenseCache, Parameter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixMode {
    /// Learnable complex filter per head over the real-input spectrum.
    Spectral,
    /// Fixed `Re(FFT)` along time with no learnable filter.
    Fnet,
    /// Mixing step skipped; only the output projection is applied.
    Identity,
}

#[derive(Clone, Debug)]
pub struct FourierMix {
    heads: usize,
    seq_len: usize,
    width: usize,
    pub mode: MixMode,
    /// `[heads, bins]` real and imaginary filter parts. Absent in
    /// [`MixMode::Fnet`] layers.
    pub filter_re: Option<Parameter>,
    pub filter_im: Option<Parameter>,
    pub proj: Dense,
    plan: FftPlan,
}

#[derive(Clone, Debug)]
pub struct FourierMixCache {
    batch: usize,
    spectra: Vec<Complex64>,
    proj: DenseCache,
}

impl FourierMix {
    /// Filters start at `1 + 0i`, so a fresh spectral layer mixes as the
    /// identity before its projection.
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        seq_len: usize,
        width: usize,
        heads: usize,
        mode: MixMode,
        rng: &mut R,
    ) -> Result<Self> {
        if heads == 0 || width % heads != 0 {
            return Err(Error::Config(format!(
                "width {width} is not divisible by {heads} heads"
            )));
        }
        let plan = FftPlan::new(seq_len)?;
        let bins = plan.real_bins();
        let (filter_re, filter_im) = if mode == MixMode::Fnet {
            (None, None)
        } else {
            (
                Some(Parameter::new(
                    format!("{name}.filter_re"),
                    Tensor::filled(&[heads, bins], 1.0),
                )),
                Some(Parameter::new(
                    format!("{name}.filter_im"),
                    Tensor::zeros(&[heads, bins]),
                )),
            )
        };
        let proj = Dense::init(&format!("{name}.proj"), width, width, rng);
        Ok(FourierMix {
            heads,
            seq_len,
            width,
            mode,
            filter_re,
            filter_im,
            proj,
            plan,
        })
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn bins(&self) -> usize {
        self.plan.real_bins()
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out: Vec<&Parameter> = self.filter_re.iter().chain(&self.filter_im).collect();
        out.extend(self.proj.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out: Vec<&mut Parameter> = self
            .filter_re
            .iter_mut()
            .chain(self.filter_im.iter_mut())
            .collect();
        out.extend(self.proj.params_mut());
        out
    }

    fn check_input(&self, x: &Tensor, op: &'static str) -> Result<usize> {
        let s = x.shape();
        if s.len() != 3 || s[1] != self.seq_len || s[2] != self.width {
            return Err(Error::shape(
                op,
                format!(
                    "expected [B, {}, {}], got {s:?}",
                    self.seq_len, self.width
                ),
            ));
        }
        Ok(s[0])
    }

    fn filter(&self, head: usize, bin: usize) -> Complex64 {
        let k = self.bins();
        match (&self.filter_re, &self.filter_im) {
            (Some(re), Some(im)) => Complex64::new(
                re.value.data()[head * k + bin],
                im.value.data()[head * k + bin],
            ),
            _ => Complex64::new(1.0, 0.0),
        }
    }

    /// Runs `per_pair` over channels two at a time with their time series
    /// gathered from `src[batch, T, D]`, scattering the results into a new
    /// buffer of the same layout. With an odd width the last channel is
    /// paired with a zero series whose output is dropped.
    fn map_channel_pairs(
        &self,
        src: &[f64],
        batch: usize,
        mut per_pair: impl FnMut(usize, [usize; 2], [&[f64]; 2], [&mut [f64]; 2]),
    ) -> Vec<f64> {
        let (t, d) = (self.seq_len, self.width);
        let mut dst = vec![0.0; src.len()];
        let (mut xa, mut xb) = (vec![0.0; t], vec![0.0; t]);
        let (mut ya, mut yb) = (vec![0.0; t], vec![0.0; t]);
        for b in 0..batch {
            let base = b * t * d;
            for c in (0..d).step_by(2) {
                let c2 = (c + 1).min(d - 1);
                let paired = c2 != c;
                for s in 0..t {
                    xa[s] = src[base + s * d + c];
                    xb[s] = if paired { src[base + s * d + c2] } else { 0.0 };
                }
                per_pair(b, [c, c2], [&xa, &xb], [&mut ya, &mut yb]);
                for s in 0..t {
                    dst[base + s * d + c] = ya[s];
                    if paired {
                        dst[base + s * d + c2] = yb[s];
                    }
                }
            }
        }
        dst
    }

    /// Applies the mixing step (everything before the projection), returning
    /// the mixed values and, if asked, each channel's input spectrum.
    fn mix(&self, x: &Tensor, batch: usize, keep_spectra: bool) -> (Vec<f64>, Vec<Complex64>) {
        let (d, k) = (self.width, self.bins());
        let group = d / self.heads;
        let zero = Complex64::new(0.0, 0.0);
        match self.mode {
            MixMode::Identity => (x.data().to_vec(), Vec::new()),
            MixMode::Fnet => {
                let mixed = self.map_channel_pairs(x.data(), batch, |_, _, [xa, xb], [ya, yb]| {
                    self.plan.real_part_pair(xa, xb, ya, yb);
                });
                (mixed, Vec::new())
            }
            MixMode::Spectral => {
                let mut spectra = if keep_spectra { vec![zero; batch * d * k] } else { Vec::new() };
                let (mut sa, mut sb) = (vec![zero; k], vec![zero; k]);
                let mixed = self.map_channel_pairs(x.data(), batch, |b, [c, c2], [xa, xb], [ya, yb]| {
                    self.plan.rfft_pair(xa, xb, &mut sa, &mut sb);
                    if keep_spectra {
                        spectra[(b * d + c) * k..(b * d + c + 1) * k].copy_from_slice(&sa);
                        spectra[(b * d + c2) * k..(b * d + c2 + 1) * k].copy_from_slice(&sb);
                    }
                    for bin in 0..k {
                        sa[bin] *= self.filter(c / group, bin);
                        sb[bin] *= self.filter(c2 / group, bin);
                    }
                    self.plan.irfft_pair(&sa, &sb, ya, yb);
                });
                (mixed, spectra)
            }
        }
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let batch = self.check_input(x, "fourier_mix_forward")?;
        let (mixed, _) = self.mix(x, batch, false);
        self.proj.infer(&Tensor::from_parts(x.shape().to_vec(), mixed))
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, FourierMixCache)> {
        let batch = self.check_input(x, "fourier_mix_forward")?;
        let (mixed, spectra) = self.mix(x, batch, true);
        let mixed = Tensor::from_parts(x.shape().to_vec(), mixed);
        mixed.ensure_finite("fourier_mix_forward")?;
        let (y, proj) = self.proj.forward(&mixed)?;
        Ok((
            y,
            FourierMixCache {
                batch,
                spectra,
                proj,
            },
        ))
    }

    /// The spectral filter is self-adjoint up to conjugation: the input
    /// gradient filters `dy` with `conj(g)`, and the filter gradient is
    /// `Σ c_k/T · DY_k · conj(X_k)` with `c_k = 1` on the DC and Nyquist bins
    /// and `2` elsewhere.
    pub fn backward(&mut self, dy: &Tensor, cache: &FourierMixCache) -> Result<Tensor> {
        let batch = self.check_input(dy, "fourier_mix_backward")?;
        if batch != cache.batch {
            return Err(Error::shape(
                "fourier_mix_backward",
                format!("dy batch {batch} vs cached batch {}", cache.batch),
            ));
        }
        let dmixed = self.proj.backward(dy, &cache.proj)?;
        if self.mode == MixMode::Identity {
            return Ok(dmixed);
        }
        let (t, d, k) = (self.seq_len, self.width, self.bins());
        let group = d / self.heads;
        let zero = Complex64::new(0.0, 0.0);
        let mut dfilter = vec![zero; self.heads * k];
        let dx = match self.mode {
            MixMode::Identity => unreachable!(),
            // Re(FFT) is a symmetric cosine matrix, so it is its own adjoint.
            MixMode::Fnet => self.map_channel_pairs(dmixed.data(), batch, |_, _, [xa, xb], [ya, yb]| {
                self.plan.real_part_pair(xa, xb, ya, yb);
            }),
            MixMode::Spectral => {
                let (mut sa, mut sb) = (vec![zero; k], vec![zero; k]);
                self.map_channel_pairs(dmixed.data(), batch, |b, [c, c2], [xa, xb], [ya, yb]| {
                    self.plan.rfft_pair(xa, xb, &mut sa, &mut sb);
                    let mut channels = vec![(c, &mut sa)];
                    if c2 != c {
                        channels.push((c2, &mut sb));
                    }
                    for (ch, spec) in channels {
                        let head = ch / group;
                        let x_spec = &cache.spectra[(b * d + ch) * k..(b * d + ch + 1) * k];
                        for bin in 0..k {
                            let weight = if bin == 0 || 2 * bin == t { 1.0 } else { 2.0 };
                            dfilter[head * k + bin] += spec[bin] * x_spec[bin].conj() * (weight / t as f64);
                            spec[bin] *= self.filter(head, bin).conj();
                        }
                    }
                    self.plan.irfft_pair(&sa, &sb, ya, yb);
                })
            }
        };
        if let (Some(re), Some(im)) = (self.filter_re.as_mut(), self.filter_im.as_mut()) {
            if self.mode == MixMode::Spectral {
                for ((gr, gi), df) in re
                    .grad
                    .data_mut()
                    .iter_mut()
                    .zip(im.grad.data_mut().iter_mut())
                    .zip(&dfilter)
                {
                    *gr += df.re;
                    *gi += df.im;
                }
            }
        }
        Ok(Tensor::from_parts(dmixed.shape().to_vec(), dx))
    }
}
