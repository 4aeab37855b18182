use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ModelState, Variant};
use crate::numerics::Tensor;
use crate::training::stats::{mean, percentile};

pub const THROUGHPUT_BATCH: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyReport {
    pub variant: Variant,
    pub batch1_mean_ms: f64,
    pub batch1_median_ms: f64,
    pub batch32_throughput_per_s: f64,
    pub warmup_iters: usize,
    pub measured_iters: usize,
    pub throughput_iters: usize,
    /// Inference always runs on the calling thread.
    pub thread_count: usize,
}

/// Runs `body` `warmup` times untimed, then `iters` times, returning the
/// wall time of each measured call in seconds.
pub fn time_loop(warmup: usize, iters: usize, mut body: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    if iters == 0 {
        return Err(Error::Config("benchmark needs at least one measured iteration".into()));
    }
    for _ in 0..warmup {
        body()?;
    }
    let mut times = Vec::with_capacity(iters);
    for _ in 0..iters {
        let start = Instant::now();
        body()?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(times)
}

fn fixed_input(model: &ModelState, batch: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let c = model.config();
    Tensor::from_fn(&[batch, c.seq_len, c.n_features], |_| rng.random_range(0.0..1.0))
}

/// Batch-1 forward latency over `iters` calls after `warmup`, and batch-32
/// throughput over `max(iters / 10, 1)` calls. Only the forward call is timed.
pub fn bench_latency(model: &ModelState, warmup: usize, iters: usize, seed: u64) -> Result<LatencyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let single = fixed_input(model, 1, &mut rng);
    let times = time_loop(warmup, iters, || {
        black_box(model.predict(black_box(&single))?);
        Ok(())
    })?;
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);

    let batch = fixed_input(model, THROUGHPUT_BATCH, &mut rng);
    let throughput_iters = (iters / 10).max(1);
    let batch_times = time_loop(warmup.min(10), throughput_iters, || {
        black_box(model.predict(black_box(&batch))?);
        Ok(())
    })?;
    let total: f64 = batch_times.iter().sum();

    Ok(LatencyReport {
        variant: model.config().variant,
        batch1_mean_ms: mean(&times) * 1e3,
        batch1_median_ms: percentile(&sorted, 0.5) * 1e3,
        batch32_throughput_per_s: (THROUGHPUT_BATCH * throughput_iters) as f64 / total,
        warmup_iters: warmup,
        measured_iters: iters,
        throughput_iters,
        thread_count: 1,
    })
}
