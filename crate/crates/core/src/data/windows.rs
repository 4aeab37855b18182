use super::cmapss::{cap_rul, label_rul, EngineSeries, N_FEATURES};
use super::normalize::Normalizer;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Window length and fractional overlap between consecutive training windows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSpec {
    pub len: usize,
    pub overlap: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { len: 30, overlap: 0.5 }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::Config("window length must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!("overlap {} is outside [0, 1)", self.overlap)));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        ((self.len as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    /// Exclusive end rows of the training windows over a series of length
    /// `n`: starts at multiples of the stride, plus a window flush with the
    /// end when the stride does not land there. Series shorter than the
    /// window give a single (padded) window.
    pub fn window_ends(&self, n: usize) -> Vec<usize> {
        if n <= self.len {
            return vec![n];
        }
        let stride = self.stride();
        let mut ends: Vec<usize> = (0..)
            .map(|k| k * stride + self.len)
            .take_while(|&e| e <= n)
            .collect();
        if ends.last() != Some(&n) {
            ends.push(n);
        }
        ends
    }
}

/// Normalized windows `x[B, len, 24]` with RUL targets in cycles.
///
/// `starts[i]` is the row index of window `i`'s first row; negative values
/// count the rows padded by repeating the engine's first row.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowBatch {
    pub x: Tensor,
    pub y: Vec<f64>,
    pub engine_ids: Vec<u32>,
    pub starts: Vec<i64>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn window_len(&self) -> usize {
        self.x.shape()[1]
    }

    pub fn targets(&self) -> Tensor {
        Tensor::from_parts(vec![self.len()], self.y.clone())
    }

    /// Windows at `indices`, in that order, as `(x, y)` tensors.
    pub fn gather(&self, indices: &[usize]) -> (Tensor, Tensor) {
        let block = self.window_len() * N_FEATURES;
        let mut x = Vec::with_capacity(indices.len() * block);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(&self.x.data()[i * block..(i + 1) * block]);
            y.push(self.y[i]);
        }
        (
            Tensor::from_parts(vec![indices.len(), self.window_len(), N_FEATURES], x),
            Tensor::from_parts(vec![indices.len()], y),
        )
    }
}

struct Builder {
    window: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    engine_ids: Vec<u32>,
    starts: Vec<i64>,
}

impl Builder {
    fn new(window: usize) -> Self {
        Builder {
            window,
            x: Vec::new(),
            y: Vec::new(),
            engine_ids: Vec::new(),
            starts: Vec::new(),
        }
    }

    fn push(&mut self, rows: &[[f64; N_FEATURES]], end: usize, unit: u32, label: f64) {
        let start = end as i64 - self.window as i64;
        for r in start..end as i64 {
            self.x.extend_from_slice(&rows[r.max(0) as usize]);
        }
        self.y.push(label);
        self.engine_ids.push(unit);
        self.starts.push(start);
    }

    fn finish(self, op: &'static str) -> Result<WindowBatch> {
        if self.y.is_empty() {
            return Err(Error::Empty { op });
        }
        let x = Tensor::new(vec![self.y.len(), self.window, N_FEATURES], self.x)?;
        Ok(WindowBatch {
            x,
            y: self.y,
            engine_ids: self.engine_ids,
            starts: self.starts,
        })
    }
}

/// Overlapping windows over run-to-failure series, labelled with the RUL at
/// each window's final row.
pub fn make_train_windows(
    series: &[EngineSeries],
    norm: &Normalizer,
    spec: WindowSpec,
    rul_cap: Option<u32>,
) -> Result<WindowBatch> {
    spec.validate()?;
    let mut b = Builder::new(spec.len);
    for e in series {
        let labels = label_rul(e, rul_cap)?;
        let rows = norm.apply_series(e);
        for end in spec.window_ends(e.len()) {
            b.push(&rows, end, e.unit_id, labels[end - 1]);
        }
    }
    b.finish("make_train_windows")
}

/// One window per engine covering its final rows, labelled from the
/// ground-truth RUL list (in unit order).
pub fn make_test_windows(
    series: &[EngineSeries],
    truth: &[u32],
    norm: &Normalizer,
    window: usize,
    rul_cap: Option<u32>,
) -> Result<WindowBatch> {
    if series.len() != truth.len() {
        return Err(Error::Data(format!(
            "{} test engines but {} ground-truth RUL values",
            series.len(),
            truth.len()
        )));
    }
    if window == 0 {
        return Err(Error::Config("window length must be at least 1".into()));
    }
    let mut b = Builder::new(window);
    for (e, &rul) in series.iter().zip(truth) {
        if e.is_empty() {
            return Err(Error::Data(format!("test engine {} has no rows", e.unit_id)));
        }
        b.push(&norm.apply_series(e), e.len(), e.unit_id, cap_rul(rul, rul_cap));
    }
    b.finish("make_test_windows")
}
