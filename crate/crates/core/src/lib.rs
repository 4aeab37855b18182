//! Remaining-useful-life regression for turbofan run-to-failure data with a
//! Fourier-mixing transformer encoder followed by a GRU.

pub mod artifacts;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod numerics;
pub mod training;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
