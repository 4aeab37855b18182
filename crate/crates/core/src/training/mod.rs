//! Mini-batch Adam training with cosine decay and early stopping, plus
//! multi-seed aggregation.

mod optim;
pub mod stats;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use optim::{best_index, cosine_lr, early_stop_check, Adam};

use crate::data::{PreparedData, WindowBatch};
use crate::error::{Error, Result};
use crate::eval::{evaluate_ensemble, predict_windows, EnsembleEvaluation};
use crate::model::{ModelConfig, ModelState, TargetScaling};
use crate::nn::mse_loss;
use crate::numerics::Tensor;
use stats::{mean, t_interval, DEFAULT_LEVEL};

pub const DEFAULT_SEEDS: [u64; 3] = [42, 43, 44];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub seeds: Vec<u64>,
    pub rul_cap: Option<u32>,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            lr_max: 1e-3,
            lr_min: 1e-5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            patience: 10,
            min_delta: 1e-4,
            seeds: DEFAULT_SEEDS.to_vec(),
            rul_cap: None,
            val_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return fail("learning rates must satisfy 0 < lr_min ≤ lr_max");
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2)) {
            return fail("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) || !(self.min_delta >= 0.0) {
            return fail("adam_eps must be positive and min_delta non-negative");
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return fail("val_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean squared error over the epoch's training mini-batches.
    pub train_mse: f64,
    pub val_mse: f64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters the returned model holds.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl RunHistory {
    pub fn val_mse(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_mse).collect()
    }
}

/// Mean squared error of `model` over every window of `batch`.
pub fn batch_mse(model: &ModelState, batch: &WindowBatch) -> Result<f64> {
    let pred = predict_windows(model, batch)?;
    Ok(pred.iter().zip(&batch.y).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / batch.len() as f64)
}

/// One seeded run: window-level shuffling each epoch, MSE mini-batch steps
/// under a cosine schedule spanning all planned steps, validation after every
/// epoch, and early stopping. The returned model holds the parameters of the
/// best validation epoch.
pub fn train_run(
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<(ModelState, RunHistory)> {
    cfg.validate()?;
    let mut model = ModelState::build(model_cfg.clone(), seed)?;
    model.target = TargetScaling::from_targets(&data.train.y);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(1);
    let mut adam = Adam::new(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let n = data.train.len();
    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;
    let mut order: Vec<usize> = (0..n).collect();

    let mut history = RunHistory {
        epochs: Vec::with_capacity(cfg.epochs),
        best_epoch: 1,
        stopped_early: false,
    };
    let mut best_params: Option<Vec<Tensor>> = None;
    let mut step = 0;
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut sse = 0.0;
        let mut lr = cfg.lr_max;
        for batch_idx in order.chunks(cfg.batch_size) {
            let (x, y) = data.train.gather(batch_idx);
            let (pred, cache) = model.forward(&x).map_err(|e| diverged(epoch, step, e))?;
            let (loss, dpred) = mse_loss(&pred, &y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step,
                    detail: format!("loss is {loss}"),
                });
            }
            sse += loss * batch_idx.len() as f64;
            model.backward(&dpred, &cache).map_err(|e| diverged(epoch, step, e))?;
            lr = cosine_lr(step, total_steps, cfg.lr_max, cfg.lr_min)?;
            adam.step(&mut model.parameters_mut(), lr)
                .map_err(|e| diverged(epoch, step, e))?;
            step += 1;
        }
        let val_mse = batch_mse(&model, &data.val).map_err(|e| diverged(epoch, step, e))?;
        history.epochs.push(EpochRecord {
            epoch,
            train_mse: sse / n as f64,
            val_mse,
            lr,
            seconds: started.elapsed().as_secs_f64(),
        });
        let vals = history.val_mse();
        let best = best_index(&vals, cfg.min_delta).expect("non-empty history");
        if best + 1 == epoch {
            history.best_epoch = epoch;
            best_params = Some(model.parameters().iter().map(|p| p.value.clone()).collect());
        }
        if early_stop_check(&vals, cfg.patience, cfg.min_delta) {
            history.stopped_early = epoch < cfg.epochs;
            break;
        }
    }
    if let Some(saved) = best_params {
        for (p, v) in model.parameters_mut().into_iter().zip(saved) {
            p.value = v;
        }
    }
    Ok((model, history))
}

fn diverged(epoch: usize, step: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { .. } | Error::NonFiniteGradient { .. } => Error::Diverged {
            epoch,
            step,
            detail: e.to_string(),
        },
        other => other,
    }
}

/// Across-seed summary of one epoch: mean and Student-t interval of the
/// train and validation MSE over the runs that reached it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub epoch: usize,
    pub mean_train: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_val: f64,
    pub val_ci_lo: f64,
    pub val_ci_hi: f64,
    /// Runs that reached this epoch.
    pub runs: usize,
}

pub fn aggregate_histories(histories: &[&RunHistory]) -> Result<Vec<AggregateRow>> {
    let max_epochs = histories.iter().map(|h| h.epochs.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(max_epochs);
    for e in 0..max_epochs {
        let reached: Vec<&EpochRecord> = histories.iter().filter_map(|h| h.epochs.get(e)).collect();
        let train: Vec<f64> = reached.iter().map(|r| r.train_mse).collect();
        let val: Vec<f64> = reached.iter().map(|r| r.val_mse).collect();
        let (ci_lo, ci_hi) = t_interval(&train, DEFAULT_LEVEL)?;
        let (val_ci_lo, val_ci_hi) = t_interval(&val, DEFAULT_LEVEL)?;
        rows.push(AggregateRow {
            epoch: e + 1,
            runs: reached.len(),
            mean_train: mean(&train),
            ci_lo,
            ci_hi,
            mean_val: mean(&val),
            val_ci_lo,
            val_ci_hi,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub seed: u64,
    pub model: ModelState,
    pub history: RunHistory,
}

#[derive(Clone, Debug)]
pub struct MultiRunReport {
    pub runs: Vec<RunOutcome>,
    pub aggregate: Vec<AggregateRow>,
    pub test: EnsembleEvaluation,
}

/// Trains one run per configured seed, in parallel threads, and aggregates
/// learning curves and test metrics. Results are in seed-list order and
/// identical to sequential execution.
pub fn multi_run(model_cfg: &ModelConfig, cfg: &TrainConfig, data: &PreparedData) -> Result<MultiRunReport> {
    cfg.validate()?;
    model_cfg.validate()?;
    let results: Vec<Result<(ModelState, RunHistory)>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| s.spawn(move || train_run(model_cfg, cfg, data, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    for (&seed, r) in cfg.seeds.iter().zip(results) {
        let (model, history) = r.map_err(|e| Error::Run { seed, source: Box::new(e) })?;
        runs.push(RunOutcome { seed, model, history });
    }
    let aggregate = aggregate_histories(&runs.iter().map(|r| &r.history).collect::<Vec<_>>())?;
    let models: Vec<ModelState> = runs.iter().map(|r| r.model.clone()).collect();
    let test = evaluate_ensemble(&models, &data.test)?;
    Ok(MultiRunReport { runs, aggregate, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, DataOptions};
    use crate::model::Variant;

    fn tiny_model() -> ModelConfig {
        ModelConfig {
            variant: Variant::Hybrid,
            d_model: 8,
            n_heads: 2,
            gru_units: 8,
            ffn_width: 16,
            ..Default::default()
        }
    }

    fn data() -> PreparedData {
        PreparedData::new(&synth_generate(8, 11).unwrap(), DataOptions::default()).unwrap()
    }

    fn quick(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            seeds: vec![5],
            ..Default::default()
        }
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let d = data();
        let (a, ha) = train_run(&tiny_model(), &quick(3), &d, 9).unwrap();
        let (b, hb) = train_run(&tiny_model(), &quick(3), &d, 9).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        for (x, y) in ha.epochs.iter().zip(&hb.epochs) {
            assert_eq!((x.train_mse, x.val_mse, x.lr), (y.train_mse, y.val_mse, y.lr));
        }
        let (c, _) = train_run(&tiny_model(), &quick(3), &d, 10).unwrap();
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn history_shape_and_best_epoch() {
        let d = data();
        let (model, h) = train_run(&tiny_model(), &quick(4), &d, 1).unwrap();
        assert_eq!(h.epochs.len(), 4);
        assert!(h.best_epoch >= 1 && h.best_epoch <= h.epochs.len());
        assert!(!h.stopped_early);
        let best_val = h.epochs[h.best_epoch - 1].val_mse;
        assert_eq!(batch_mse(&model, &d.val).unwrap(), best_val);
        assert!(h.epochs.iter().all(|e| e.lr <= 1e-3 && e.lr >= 1e-5));
        assert!(h.epochs.windows(2).all(|w| w[1].lr < w[0].lr));
    }

    #[test]
    fn zero_patience_stops_after_first_epoch() {
        let d = data();
        let cfg = TrainConfig { patience: 0, ..quick(5) };
        let (_, h) = train_run(&tiny_model(), &cfg, &d, 1).unwrap();
        assert_eq!(h.epochs.len(), 1);
        assert!(h.stopped_early);
        assert_eq!(h.best_epoch, 1);
    }

    #[test]
    fn divergence_is_reported() {
        let d = data();
        let cfg = TrainConfig { lr_max: 1e300, lr_min: 1e299, ..quick(2) };
        match train_run(&tiny_model(), &cfg, &d, 1) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {:?}", other.map(|r| r.1)),
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { lr_min: 1e-2, ..Default::default() },
            TrainConfig { lr_min: 0.0, ..Default::default() },
            TrainConfig { seeds: vec![], ..Default::default() },
            TrainConfig { val_fraction: 1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn single_seed_aggregate_has_zero_width() {
        let d = data();
        let report = multi_run(&tiny_model(), &quick(2), &d).unwrap();
        assert_eq!(report.aggregate.len(), 2);
        for (row, rec) in report.aggregate.iter().zip(&report.runs[0].history.epochs) {
            assert_eq!((row.ci_lo, row.ci_hi), (row.mean_train, row.mean_train));
            assert_eq!((row.val_ci_lo, row.val_ci_hi), (row.mean_val, row.mean_val));
            assert_eq!(row.mean_train, rec.train_mse);
        }
    }

    #[test]
    fn repeated_seeds_match_sequential_runs() {
        let d = data();
        let cfg = TrainConfig { seeds: vec![3, 3, 4], ..quick(2) };
        let report = multi_run(&tiny_model(), &cfg, &d).unwrap();
        assert_eq!(report.runs[0].model.to_bytes(), report.runs[1].model.to_bytes());
        let (seq, _) = train_run(&tiny_model(), &cfg, &d, 4).unwrap();
        assert_eq!(report.runs[2].model.to_bytes(), seq.to_bytes());
        assert_eq!(report.test.per_model.len(), 3);
    }

    #[test]
    fn aggregate_over_uneven_histories() {
        let rec = |epoch, v: f64| EpochRecord { epoch, train_mse: v, val_mse: 2.0 * v, lr: 0.0, seconds: 0.0 };
        let a = RunHistory { epochs: vec![rec(1, 1.0), rec(2, 3.0)], best_epoch: 1, stopped_early: false };
        let b = RunHistory { epochs: vec![rec(1, 2.0)], best_epoch: 1, stopped_early: true };
        let rows = aggregate_histories(&[&a, &b]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].runs, rows[0].mean_train, rows[0].mean_val), (2, 1.5, 3.0));
        assert_eq!((rows[1].runs, rows[1].mean_train, rows[1].ci_lo), (1, 3.0, 3.0));
    }
}
