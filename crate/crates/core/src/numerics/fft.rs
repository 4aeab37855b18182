//! Discrete Fourier transforms for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 kernel. Lengths whose prime
//! factors are all at most 7 use a recursive mixed-radix kernel. Every other
//! length goes through Bluestein's chirp-z identity, which rewrites the DFT
//! as a circular convolution of power-of-two size `m >= 2n - 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Spectrum carrier with split real and imaginary buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVector {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::shape(
                "complex_vector",
                format!("re has {} values, im has {}", re.len(), im.len()),
            ));
        }
        Ok(ComplexVector { re, im })
    }

    pub fn zeros(n: usize) -> Self {
        ComplexVector {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn from_real(x: &[f64]) -> Self {
        ComplexVector {
            re: x.to_vec(),
            im: vec![0.0; x.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, k: usize) -> Complex64 {
        Complex64::new(self.re[k], self.im[k])
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    pub fn from_complex(values: &[Complex64]) -> Self {
        ComplexVector {
            re: values.iter().map(|c| c.re).collect(),
            im: values.iter().map(|c| c.im).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &ComplexVector) -> f64 {
        assert_eq!(self.len(), other.len());
        (0..self.len())
            .map(|k| (self.get(k) - other.get(k)).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
struct Radix2 {
    n: usize,
    /// Bit-reversal permutation as disjoint swaps.
    swaps: Vec<(usize, usize)>,
    /// Stage twiddles back to back: for butterfly span `2h`, entries
    /// `h − 1 .. 2h − 1` hold `exp(−2πi·k / 2h)` for `k < h`.
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let bits = n.trailing_zeros();
        let swaps = (0..n)
            .filter_map(|i| {
                let j = if n > 1 { i.reverse_bits() >> (usize::BITS - bits) } else { i };
                (j > i).then_some((i, j))
            })
            .collect();
        let mut twiddles = Vec::with_capacity(n.saturating_sub(1));
        let mut half = 1;
        while half < n {
            let len = 2 * half;
            twiddles.extend((0..half).map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64)));
            half = len;
        }
        Radix2 { n, swaps, twiddles }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        for &(i, j) in &self.swaps {
            buf.swap(i, j);
        }
        let mut half = 1;
        while half < self.n {
            let w = &self.twiddles[half - 1..2 * half - 1];
            for block in buf.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(w) {
                    let t = *b * w;
                    let x = *a;
                    *a = x + t;
                    *b = x - t;
                }
            }
            half *= 2;
        }
    }
}

#[derive(Clone, Debug)]
struct Bluestein {
    n: usize,
    inner: Radix2,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the chirp argument small so it stays accurate.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                Complex64::from_polar(1.0, -PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Bluestein {
            n,
            inner,
            chirp,
            kernel_spectrum: kernel,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let m = self.inner.n;
        let mut work = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..self.n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.forward(&mut work);
        for (w, h) in work.iter_mut().zip(&self.kernel_spectrum) {
            // conj so the inner forward transform acts as an inverse below
            *w = (*w * h).conj();
        }
        self.inner.forward(&mut work);
        let scale = 1.0 / m as f64;
        for k in 0..self.n {
            buf[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

const MAX_RADIX: usize = 7;
const SIN_60: f64 = 0.866_025_403_784_438_6;

/// Prime factors of `n` if none exceeds [`MAX_RADIX`].
fn small_factors(mut n: usize) -> Option<Vec<usize>> {
    let mut factors = Vec::new();
    for p in [2, 3, 5, 7] {
        while n % p == 0 {
            factors.push(p);
            n /= p;
        }
    }
    (n == 1).then_some(factors)
}

#[derive(Clone, Debug)]
struct MixedRadix {
    n: usize,
    factors: Vec<usize>,
    /// `exp(−2πi·j / n)` for `j < n`.
    twiddles: Vec<Complex64>,
}

impl MixedRadix {
    fn new(n: usize, factors: Vec<usize>) -> Self {
        let twiddles = (0..n)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
            .collect();
        MixedRadix { n, factors, twiddles }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        let input = buf.to_vec();
        self.transform(&input, 1, buf, &self.factors);
    }

    /// DFT of `input[0], input[stride], …` (length `out.len()`) into `out`:
    /// `p` interleaved sub-transforms, then `p`-point butterflies.
    fn transform(&self, input: &[Complex64], stride: usize, out: &mut [Complex64], factors: &[usize]) {
        let len = out.len();
        let Some((&p, rest)) = factors.split_first() else {
            out[0] = input[0];
            return;
        };
        let m = len / p;
        if rest.is_empty() {
            for (j, o) in out.iter_mut().enumerate() {
                *o = input[j * stride];
            }
        } else {
            for (j, sub) in out.chunks_exact_mut(m).enumerate() {
                self.transform(&input[j * stride..], stride * p, sub, rest);
            }
        }
        let step = self.n / len;
        let root = self.n / p;
        let mut t = [Complex64::new(0.0, 0.0); MAX_RADIX];
        for k in 0..m {
            t[0] = out[k];
            for (j, tj) in t[1..p].iter_mut().enumerate() {
                *tj = out[(j + 1) * m + k] * self.twiddles[(j + 1) * k * step];
            }
            match p {
                2 => {
                    out[k] = t[0] + t[1];
                    out[k + m] = t[0] - t[1];
                }
                3 => {
                    // X₁,₂ = t₀ − s/2 ∓ i·(√3/2)·d
                    let s = t[1] + t[2];
                    let d = t[1] - t[2];
                    let mid = t[0] - s * 0.5;
                    let rot = Complex64::new(d.im, -d.re) * SIN_60;
                    out[k] = t[0] + s;
                    out[k + m] = mid + rot;
                    out[k + 2 * m] = mid - rot;
                }
                _ => {
                    let mut roots = [Complex64::new(0.0, 0.0); MAX_RADIX];
                    for (r, w) in roots[..p].iter_mut().enumerate() {
                        *w = self.twiddles[r * root];
                    }
                    for q in 0..p {
                        let mut acc = t[0];
                        // root index (j·q) mod p, advanced without division
                        let mut e = q;
                        for tj in &t[1..p] {
                            acc += tj * roots[e];
                            e += q;
                            if e >= p {
                                e -= p;
                            }
                        }
                        out[k + q * m] = acc;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Algorithm {
    Radix2(Radix2),
    MixedRadix(MixedRadix),
    Bluestein(Bluestein),
}

/// Precomputed twiddles (and chirp, for lengths with a prime factor above 7)
/// for one transform length.
#[derive(Clone, Debug)]
pub struct FftPlan {
    n: usize,
    algorithm: Algorithm,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty { op: "fft" });
        }
        let algorithm = if n.is_power_of_two() {
            Algorithm::Radix2(Radix2::new(n))
        } else if let Some(factors) = small_factors(n) {
            Algorithm::MixedRadix(MixedRadix::new(n, factors))
        } else {
            Algorithm::Bluestein(Bluestein::new(n))
        };
        Ok(FftPlan { n, algorithm })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of non-redundant bins of a real-input transform.
    pub fn real_bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// Unnormalized forward DFT, `X_k = Σ x_n e^{-2πikn/N}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "fft buffer length");
        match &self.algorithm {
            Algorithm::Radix2(p) => p.forward(buf),
            Algorithm::MixedRadix(p) => p.forward(buf),
            Algorithm::Bluestein(p) => p.forward(buf),
        }
    }

    /// Inverse DFT including the `1/N` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v = v.conj() * scale;
        }
    }

    /// First `N/2 + 1` bins of the DFT of a real signal.
    pub fn rfft(&self, x: &[f64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.n, "rfft input length");
        assert_eq!(out.len(), self.real_bins(), "rfft output length");
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        out.copy_from_slice(&buf[..self.real_bins()]);
    }

    /// Inverse of [`FftPlan::rfft`]: rebuilds the Hermitian spectrum and keeps
    /// the real part. Imaginary parts of the DC bin (and of the Nyquist bin for
    /// even `N`) do not influence the result.
    pub fn irfft(&self, spectrum: &[Complex64], out: &mut [f64]) {
        let bins = self.real_bins();
        assert_eq!(spectrum.len(), bins, "irfft spectrum length");
        assert_eq!(out.len(), self.n, "irfft output length");
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..bins].copy_from_slice(spectrum);
        for k in 1..bins {
            if n - k >= bins {
                buf[n - k] = spectrum[k].conj();
            }
        }
        self.inverse(&mut buf);
        for (o, v) in out.iter_mut().zip(&buf) {
            *o = v.re;
        }
    }
}

impl FftPlan {
    /// Real-input spectra of `x` and `y` from a single complex transform of
    /// `x + iy`.
    pub fn rfft_pair(&self, x: &[f64], y: &[f64], out_x: &mut [Complex64], out_y: &mut [Complex64]) {
        let n = self.n;
        let bins = self.real_bins();
        assert!(x.len() == n && y.len() == n, "rfft_pair input length");
        assert!(out_x.len() == bins && out_y.len() == bins, "rfft_pair output length");
        let mut buf: Vec<Complex64> = x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.forward(&mut buf);
        for k in 0..bins {
            let z = buf[k];
            let zc = buf[(n - k) % n].conj();
            out_x[k] = (z + zc) * 0.5;
            // (z − zc) / 2i
            let d = (z - zc) * 0.5;
            out_y[k] = Complex64::new(d.im, -d.re);
        }
    }

    /// Two [`FftPlan::irfft`] calls through one complex inverse transform.
    /// As in `irfft`, imaginary parts of the DC and Nyquist bins are ignored.
    pub fn irfft_pair(&self, sx: &[Complex64], sy: &[Complex64], out_x: &mut [f64], out_y: &mut [f64]) {
        let n = self.n;
        let bins = self.real_bins();
        assert!(sx.len() == bins && sy.len() == bins, "irfft_pair spectrum length");
        assert!(out_x.len() == n && out_y.len() == n, "irfft_pair output length");
        let real_bin = |k: usize| k == 0 || 2 * k == n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let (a, b) = if k < bins {
                (sx[k], sy[k])
            } else {
                (sx[n - k].conj(), sy[n - k].conj())
            };
            let (a, b) = if real_bin(k) {
                (Complex64::new(a.re, 0.0), Complex64::new(b.re, 0.0))
            } else {
                (a, b)
            };
            // a + i·b
            buf[k] = Complex64::new(a.re - b.im, a.im + b.re);
        }
        self.inverse(&mut buf);
        for ((ox, oy), v) in out_x.iter_mut().zip(out_y.iter_mut()).zip(&buf) {
            *ox = v.re;
            *oy = v.im;
        }
    }

    /// `Re(FFT(x))` and `Re(FFT(y))` from one complex transform.
    pub fn real_part_pair(&self, x: &[f64], y: &[f64], out_x: &mut [f64], out_y: &mut [f64]) {
        let n = self.n;
        assert!(x.len() == n && y.len() == n && out_x.len() == n && out_y.len() == n);
        let mut buf: Vec<Complex64> = x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.forward(&mut buf);
        for k in 0..n {
            let (z, w) = (buf[k], buf[(n - k) % n]);
            out_x[k] = 0.5 * (z.re + w.re);
            out_y[k] = 0.5 * (z.im + w.im);
        }
    }
}

pub fn fft_forward(x: &ComplexVector) -> Result<ComplexVector> {
    let plan = FftPlan::new(x.len())?;
    let mut buf = x.to_complex();
    plan.forward(&mut buf);
    Ok(ComplexVector::from_complex(&buf))
}

pub fn fft_inverse(x: &ComplexVector) -> Result<ComplexVector> {
    let plan = FftPlan::new(x.len())?;
    let mut buf = x.to_complex();
    plan.inverse(&mut buf);
    Ok(ComplexVector::from_complex(&buf))
}

/// Real-input transform returning `floor(N/2) + 1` bins.
pub fn rfft(x: &[f64]) -> Result<ComplexVector> {
    let plan = FftPlan::new(x.len())?;
    let mut out = vec![Complex64::new(0.0, 0.0); plan.real_bins()];
    plan.rfft(x, &mut out);
    Ok(ComplexVector::from_complex(&out))
}

/// Length-`n` real signal whose [`rfft`] is `spectrum`.
pub fn irfft(spectrum: &ComplexVector, n: usize) -> Result<Vec<f64>> {
    let plan = FftPlan::new(n)?;
    if spectrum.len() != plan.real_bins() {
        return Err(Error::shape(
            "irfft",
            format!(
                "length {n} needs {} bins, got {}",
                plan.real_bins(),
                spectrum.len()
            ),
        ));
    }
    let mut out = vec![0.0; n];
    plan.irfft(&spectrum.to_complex(), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &ComplexVector) -> ComplexVector {
        let n = x.len();
        let mut out = ComplexVector::zeros(n);
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let angle = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                acc += x.get(j) * Complex64::from_polar(1.0, angle);
            }
            out.re[k] = acc.re;
            out.im[k] = acc.im;
        }
        out
    }

    fn random_complex(n: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
        ComplexVector {
            re: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            im: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn mixed_radix_and_bluestein_agree() {
        assert_eq!(small_factors(30), Some(vec![2, 3, 5]));
        assert_eq!(small_factors(1), Some(vec![]));
        assert_eq!(small_factors(22), None);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3usize, 6, 30, 49, 210, 360] {
            let x = random_complex(n, &mut rng).to_complex();
            let mut a = x.clone();
            MixedRadix::new(n, small_factors(n).unwrap()).forward(&mut a);
            let mut b = x.clone();
            Bluestein::new(n).forward(&mut b);
            let err = a.iter().zip(&b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n}: {err}");
        }
    }

    #[test]
    fn paired_transforms_match_single_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [1usize, 2, 7, 8, 30, 31] {
            let plan = FftPlan::new(n).unwrap();
            let bins = plan.real_bins();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let zero = Complex64::new(0.0, 0.0);
            let (mut px, mut py) = (vec![zero; bins], vec![zero; bins]);
            plan.rfft_pair(&x, &y, &mut px, &mut py);
            let (mut sx, mut sy) = (vec![zero; bins], vec![zero; bins]);
            plan.rfft(&x, &mut sx);
            plan.rfft(&y, &mut sy);
            for k in 0..bins {
                assert!((px[k] - sx[k]).norm() < 1e-12 && (py[k] - sy[k]).norm() < 1e-12, "n={n} k={k}");
            }

            // arbitrary (non-Hermitian at DC/Nyquist) half spectra
            let fx: Vec<Complex64> = (0..bins).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let fy: Vec<Complex64> = (0..bins).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let (mut ox, mut oy) = (vec![0.0; n], vec![0.0; n]);
            plan.irfft_pair(&fx, &fy, &mut ox, &mut oy);
            let (mut rx, mut ry) = (vec![0.0; n], vec![0.0; n]);
            plan.irfft(&fx, &mut rx);
            plan.irfft(&fy, &mut ry);
            for t in 0..n {
                assert!((ox[t] - rx[t]).abs() < 1e-12 && (oy[t] - ry[t]).abs() < 1e-12, "n={n} t={t}");
            }

            let (mut ax, mut ay) = (vec![0.0; n], vec![0.0; n]);
            plan.real_part_pair(&x, &y, &mut ax, &mut ay);
            let full_x = fft_forward(&ComplexVector::from_real(&x)).unwrap();
            let full_y = fft_forward(&ComplexVector::from_real(&y)).unwrap();
            for k in 0..n {
                assert!((ax[k] - full_x.re[k]).abs() < 1e-12 && (ay[k] - full_y.re[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_becomes_constant() {
        let out = fft_forward(&ComplexVector::from_real(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(out.re, vec![1.0; 4]);
        assert_eq!(out.im, vec![0.0; 4]);
    }

    #[test]
    fn constant_becomes_delta() {
        let out = fft_forward(&ComplexVector::from_real(&[1.0; 4])).unwrap();
        assert_eq!(out.re, vec![4.0, 0.0, 0.0, 0.0]);
        let back = fft_inverse(&out).unwrap();
        assert_eq!(back.re, vec![1.0; 4]);
    }

    #[test]
    fn inverse_of_zeros_is_zeros() {
        let out = fft_inverse(&ComplexVector::zeros(7)).unwrap();
        assert!(out.re.iter().chain(&out.im).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_length_is_rejected() {
        assert!(matches!(
            fft_forward(&ComplexVector::zeros(0)),
            Err(Error::Empty { .. })
        ));
        assert!(fft_inverse(&ComplexVector::zeros(0)).is_err());
        assert!(rfft(&[]).is_err());
    }

    #[test]
    fn length_thirty_matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let x = random_complex(30, &mut rng);
        let err = fft_forward(&x).unwrap().max_abs_diff(&naive_dft(&x));
        assert!(err < 1e-9, "err {err}");
        let back = fft_inverse(&fft_forward(&x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-10);
    }

    #[test]
    fn rfft_of_pure_sine() {
        let out = rfft(&[0.0, 1.0, 0.0, -1.0]).unwrap();
        let expected = ComplexVector::new(vec![0.0, 0.0, 0.0], vec![0.0, -2.0, 0.0]).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rfft_of_constant() {
        let out = rfft(&[2.5; 9]).unwrap();
        assert_eq!(out.len(), 5);
        assert!((out.re[0] - 22.5).abs() < 1e-12);
        assert!((1..5).all(|k| out.get(k).norm() < 1e-12));
    }

    #[test]
    fn rfft_truncates_full_dft_for_length_thirty() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let spec = rfft(&x).unwrap();
        assert_eq!(spec.len(), 16);
        let full = naive_dft(&ComplexVector::from_real(&x));
        for k in 0..16 {
            assert!((spec.get(k) - full.get(k)).norm() < 1e-9);
        }
        let back = irfft(&spec, 30).unwrap();
        let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn irfft_rejects_wrong_bin_count() {
        assert!(irfft(&ComplexVector::zeros(15), 30).is_err());
    }

    proptest! {
        #[test]
        fn linear_and_energy_preserving(
            n in 1usize..64,
            seed in any::<u64>(),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_complex(n, &mut rng);
            let y = random_complex(n, &mut rng);
            let mix = ComplexVector {
                re: x.re.iter().zip(&y.re).map(|(a, b)| alpha * a + beta * b).collect(),
                im: x.im.iter().zip(&y.im).map(|(a, b)| alpha * a + beta * b).collect(),
            };
            let fx = fft_forward(&x).unwrap();
            let fy = fft_forward(&y).unwrap();
            let combined = ComplexVector {
                re: fx.re.iter().zip(&fy.re).map(|(a, b)| alpha * a + beta * b).collect(),
                im: fx.im.iter().zip(&fy.im).map(|(a, b)| alpha * a + beta * b).collect(),
            };
            prop_assert!(fft_forward(&mix).unwrap().max_abs_diff(&combined) < 1e-9);

            let time_energy: f64 = (0..n).map(|k| x.get(k).norm_sqr()).sum();
            let freq_energy: f64 = (0..n).map(|k| fx.get(k).norm_sqr()).sum::<f64>() / n as f64;
            prop_assert!((time_energy - freq_energy).abs() < 1e-9);
        }
    }
}
