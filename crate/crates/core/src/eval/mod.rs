//! Test-set metrics, per-engine prediction intervals, and the CPU latency
//! benchmark.

mod latency;
mod metrics;

pub use latency::{bench_latency, time_loop, LatencyReport, THROUGHPUT_BATCH};
pub use metrics::{compute_metrics, MetricCis, MetricsReport};

use serde::{Deserialize, Serialize};

use crate::data::WindowBatch;
use crate::error::{Error, Result};
use crate::model::ModelState;
use crate::training::stats::{mean, t_interval, DEFAULT_LEVEL, DEFAULT_RESAMPLES};

const PREDICT_CHUNK: usize = 256;

/// Inference over every window of `batch`, in order.
pub fn predict_windows(model: &ModelState, batch: &WindowBatch) -> Result<Vec<f64>> {
    let idx: Vec<usize> = (0..batch.len()).collect();
    let mut out = Vec::with_capacity(batch.len());
    for chunk in idx.chunks(PREDICT_CHUNK) {
        let (x, _) = batch.gather(chunk);
        out.extend_from_slice(model.predict(&x)?.data());
    }
    Ok(out)
}

/// One point of the predicted-versus-true scatter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub engine: u32,
    pub truth: f64,
    pub pred: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub metrics: MetricsReport,
    pub predictions: Vec<PredictionRow>,
}

/// Per-model metrics and the across-model prediction rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEvaluation {
    pub per_model: Vec<MetricsReport>,
    pub predictions: Vec<PredictionRow>,
}

/// Metrics with engine-bootstrap intervals for a single model. Its
/// predictions carry zero-width intervals; see [`evaluate_ensemble`].
pub fn evaluate_model(model: &ModelState, test: &WindowBatch) -> Result<Evaluation> {
    let mut e = evaluate_ensemble(std::slice::from_ref(model), test)?;
    Ok(Evaluation {
        metrics: e.per_model.remove(0),
        predictions: e.predictions,
    })
}

/// Evaluates each model (bootstrap seeded with the model's seed) and pairs
/// every engine's mean prediction across the models with a Student-t
/// interval.
pub fn evaluate_ensemble(models: &[ModelState], test: &WindowBatch) -> Result<EnsembleEvaluation> {
    if models.is_empty() {
        return Err(Error::Empty { op: "evaluate" });
    }
    let mut per_model = Vec::with_capacity(models.len());
    let mut preds = Vec::with_capacity(models.len());
    for m in models {
        let p = predict_windows(m, test)?;
        let metrics = compute_metrics(&p, &test.y)?.with_bootstrap(
            &p,
            &test.y,
            DEFAULT_RESAMPLES,
            DEFAULT_LEVEL,
            m.seed(),
        )?;
        per_model.push(metrics);
        preds.push(p);
    }
    let mut predictions = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let across: Vec<f64> = preds.iter().map(|p| p[i]).collect();
        let (ci_lo, ci_hi) = t_interval(&across, DEFAULT_LEVEL)?;
        predictions.push(PredictionRow {
            engine: test.engine_ids[i],
            truth: test.y[i],
            pred: mean(&across),
            ci_lo,
            ci_hi,
        });
    }
    Ok(EnsembleEvaluation { per_model, predictions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, DataOptions, PreparedData, WindowBatch};
    use crate::model::{ModelConfig, Variant};

    fn setup() -> (ModelState, WindowBatch) {
        let raw = synth_generate(6, 1).unwrap();
        let data = PreparedData::new(&raw, DataOptions::default()).unwrap();
        let m = ModelState::build(ModelConfig::with_variant(Variant::GruOnly), 2).unwrap();
        (m, data.test)
    }

    #[test]
    fn own_predictions_as_truth_are_perfect() {
        let (m, mut test) = setup();
        test.y = predict_windows(&m, &test).unwrap();
        let e = evaluate_model(&m, &test).unwrap();
        assert_eq!(e.metrics.rmse, 0.0);
        assert_eq!(e.metrics.mae, 0.0);
        assert_eq!(e.metrics.r2, Some(1.0));
    }

    #[test]
    fn rows_reproduce_the_metrics() {
        let (m, test) = setup();
        let e = evaluate_model(&m, &test).unwrap();
        assert_eq!(e.predictions.len(), test.len());
        let se: f64 = e.predictions.iter().map(|r| (r.pred - r.truth).powi(2)).sum();
        let rmse = (se / e.predictions.len() as f64).sqrt();
        assert!((rmse - e.metrics.rmse).abs() < 1e-12);
        assert!(e.predictions.iter().all(|r| r.ci_lo == r.pred && r.ci_hi == r.pred));
    }

    #[test]
    fn ensemble_intervals() {
        let (m, test) = setup();
        let other = ModelState::build(ModelConfig::with_variant(Variant::GruOnly), 3).unwrap();
        let e = evaluate_ensemble(&[m.clone(), other.clone()], &test).unwrap();
        assert_eq!(e.per_model.len(), 2);
        let a = predict_windows(&m, &test).unwrap();
        let b = predict_windows(&other, &test).unwrap();
        for (i, r) in e.predictions.iter().enumerate() {
            assert!((r.pred - (a[i] + b[i]) / 2.0).abs() < 1e-12);
            assert!(r.ci_lo <= r.pred && r.pred <= r.ci_hi);
        }
        let same = evaluate_ensemble(&[m.clone(), m], &test).unwrap();
        assert!(same.predictions.iter().all(|r| r.ci_lo == r.ci_hi));
        assert!(evaluate_ensemble(&[], &test).is_err());
    }
}
