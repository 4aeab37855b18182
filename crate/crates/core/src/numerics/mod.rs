//! Dense tensors, deterministic matrix kernels and exact discrete Fourier
//! transforms of any length.

mod fft;
pub mod kernels;
mod tensor;

pub use fft::{fft_forward, fft_inverse, irfft, rfft, ComplexVector, FftPlan};
pub use tensor::{matmul, Tensor};
