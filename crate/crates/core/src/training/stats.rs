use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); 0 for a single value.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Two-sided Student-t interval for the mean. A single value, or identical
/// values, give a zero-width interval at the mean.
pub fn t_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty { op: "t_interval" });
    }
    let m = mean(values);
    let sd = sample_sd(values);
    if values.len() < 2 || sd == 0.0 {
        return Ok((m, m));
    }
    let df = (values.len() - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .expect("df ≥ 1")
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * sd / (values.len() as f64).sqrt();
    Ok((m - half, m + half))
}

/// Linear-interpolation quantile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap of an arbitrary statistic over `n` paired samples.
///
/// Each resample draws `n` indices uniformly with replacement from one
/// ChaCha stream seeded with `seed`; `statistic` maps the drawn indices to a
/// value. Resamples whose statistic is not finite are skipped.
pub fn bootstrap_ci_with(
    n: usize,
    n_resamples: usize,
    level: f64,
    seed: u64,
    mut statistic: impl FnMut(&[usize]) -> f64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Empty { op: "bootstrap_ci" });
    }
    if n_resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "bootstrap needs resamples ≥ 1 and level in (0, 1), got {n_resamples} and {level}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut stats = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..n);
        }
        let s = statistic(&idx);
        if s.is_finite() {
            stats.push(s);
        }
    }
    if stats.is_empty() {
        return Err(Error::NonFinite { op: "bootstrap_ci" });
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((percentile(&stats, alpha), percentile(&stats, 1.0 - alpha)))
}

/// Percentile bootstrap interval of the mean.
pub fn bootstrap_ci(values: &[f64], n_resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    bootstrap_ci_with(values.len(), n_resamples, level, seed, |idx| {
        idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64
    })
}
