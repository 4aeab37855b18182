use super::cmapss::{EngineSeries, N_FEATURES};
use crate::error::{Error, Result};

/// Per-feature min–max scaling fitted on training series.
///
/// Only obtainable through [`Normalizer::fit`] or [`Normalizer::from_bounds`],
/// so a transform can never run on an unfitted normalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    min: [f64; N_FEATURES],
    max: [f64; N_FEATURES],
}

impl Normalizer {
    pub fn fit(train: &[EngineSeries]) -> Result<Self> {
        let mut min = [f64::INFINITY; N_FEATURES];
        let mut max = [f64::NEG_INFINITY; N_FEATURES];
        let mut rows = 0usize;
        for e in train {
            for i in 0..e.len() {
                for (j, v) in e.features(i).into_iter().enumerate() {
                    min[j] = min[j].min(v);
                    max[j] = max[j].max(v);
                }
                rows += 1;
            }
        }
        if rows == 0 {
            return Err(Error::Empty { op: "fit_normalizer" });
        }
        Ok(Normalizer { min, max })
    }

    pub fn from_bounds(min: [f64; N_FEATURES], max: [f64; N_FEATURES]) -> Result<Self> {
        for j in 0..N_FEATURES {
            if !(min[j].is_finite() && max[j].is_finite() && max[j] >= min[j]) {
                return Err(Error::Data(format!(
                    "feature {j}: invalid bounds [{}, {}]",
                    min[j], max[j]
                )));
            }
        }
        Ok(Normalizer { min, max })
    }

    pub fn min(&self) -> &[f64; N_FEATURES] {
        &self.min
    }

    pub fn max(&self) -> &[f64; N_FEATURES] {
        &self.max
    }

    /// `(x − min) / (max − min)`; constant features map to 0. Values outside
    /// the fitted range are not clipped.
    pub fn apply(&self, row: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            let span = self.max[j] - self.min[j];
            out[j] = if span > 0.0 { (row[j] - self.min[j]) / span } else { 0.0 };
        }
        out
    }

    /// All rows of `e`, normalized.
    pub fn apply_series(&self, e: &EngineSeries) -> Vec<[f64; N_FEATURES]> {
        (0..e.len()).map(|i| self.apply(&e.features(i))).collect()
    }
}
