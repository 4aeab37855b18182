use crate::error::{Error, Result};
use crate::training::stats::{bootstrap_ci_with, mean};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricCis {
    pub rmse: (f64, f64),
    pub mae: (f64, f64),
    pub r2: Option<(f64, f64)>,
}

/// Regression metrics in cycles. `per_engine_errors[i] = pred[i] − truth[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when the truth has no variance.
    pub r2: Option<f64>,
    pub per_engine_errors: Vec<f64>,
    pub ci: Option<MetricCis>,
    pub diagnostics: Vec<String>,
}

fn check(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::shape(
            "compute_metrics",
            format!("{} predictions for {} targets", pred.len(), truth.len()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::Empty { op: "compute_metrics" });
    }
    if pred.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { op: "compute_metrics" });
    }
    Ok(())
}

fn r2_of(pred: &[f64], truth: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let ybar = idx.iter().map(|&i| truth[i]).sum::<f64>() / n;
    let ss_tot: f64 = idx.iter().map(|&i| (truth[i] - ybar).powi(2)).sum();
    let ss_res: f64 = idx.iter().map(|&i| (pred[i] - truth[i]).powi(2)).sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        f64::NAN
    }
}

/// RMSE, MAE and R² (against the mean of `truth`).
pub fn compute_metrics(pred: &[f64], truth: &[f64]) -> Result<MetricsReport> {
    check(pred, truth)?;
    let errors: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| p - t).collect();
    let rmse = mean(&errors.iter().map(|e| e * e).collect::<Vec<_>>()).sqrt();
    let mae = mean(&errors.iter().map(|e| e.abs()).collect::<Vec<_>>());
    let all: Vec<usize> = (0..pred.len()).collect();
    let r2 = Some(r2_of(pred, truth, &all)).filter(|v| v.is_finite());
    let mut diagnostics = Vec::new();
    if r2.is_none() {
        diagnostics.push(format!(
            "R² undefined: the {} target values have zero variance",
            truth.len()
        ));
    }
    Ok(MetricsReport {
        rmse,
        mae,
        r2,
        per_engine_errors: errors,
        ci: None,
        diagnostics,
    })
}

impl MetricsReport {
    /// Attaches percentile-bootstrap intervals obtained by resampling engines
    /// (paired prediction/truth) with replacement.
    pub fn with_bootstrap(
        mut self,
        pred: &[f64],
        truth: &[f64],
        n_resamples: usize,
        level: f64,
        seed: u64,
    ) -> Result<Self> {
        check(pred, truth)?;
        let n = pred.len();
        let err = &self.per_engine_errors;
        let rmse = bootstrap_ci_with(n, n_resamples, level, seed, |idx| {
            (idx.iter().map(|&i| err[i] * err[i]).sum::<f64>() / idx.len() as f64).sqrt()
        })?;
        let mae = bootstrap_ci_with(n, n_resamples, level, seed, |idx| {
            idx.iter().map(|&i| err[i].abs()).sum::<f64>() / idx.len() as f64
        })?;
        let r2 = match self.r2 {
            Some(_) => bootstrap_ci_with(n, n_resamples, level, seed, |idx| r2_of(pred, truth, idx)).ok(),
            None => None,
        };
        self.ci = Some(MetricCis { rmse, mae, r2 });
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn perfect_predictions() {
        let y = [3.0, 7.0, 1.0];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.rmse, m.mae, m.r2), (0.0, 0.0, Some(1.0)));
    }

    #[test]
    fn hand_computed_pair() {
        let m = compute_metrics(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!((m.rmse, m.mae, m.r2), (1.0, 1.0, Some(0.0)));
        assert_eq!(m.per_engine_errors, vec![1.0, -1.0]);
    }

    #[test]
    fn constant_truth_has_no_r2() {
        let m = compute_metrics(&[1.0, 2.0], &[5.0, 5.0]).unwrap();
        assert_eq!(m.r2, None);
        assert_eq!(m.diagnostics.len(), 1);
        let m = m.with_bootstrap(&[1.0, 2.0], &[5.0, 5.0], 100, 0.95, 1).unwrap();
        assert!(m.ci.unwrap().r2.is_none());
    }

    #[test]
    fn matches_direct_formulas() {
        let mut r = rng(5);
        let truth: Vec<f64> = (0..50).map(|_| r.random_range(0.0..150.0)).collect();
        let pred: Vec<f64> = truth.iter().map(|t| t + r.random_range(-30.0..30.0)).collect();
        let m = compute_metrics(&pred, &truth).unwrap();

        let n = 50.0;
        let mut se = 0.0;
        let mut ae = 0.0;
        for i in 0..50 {
            se += (pred[i] - truth[i]) * (pred[i] - truth[i]);
            ae += (pred[i] - truth[i]).abs();
        }
        let ybar: f64 = truth.iter().sum::<f64>() / n;
        let sst: f64 = truth.iter().map(|t| (t - ybar) * (t - ybar)).sum();
        assert!((m.rmse - (se / n).sqrt()).abs() < 1e-12);
        assert!((m.mae - ae / n).abs() < 1e-12);
        assert!((m.r2.unwrap() - (1.0 - se / sst)).abs() < 1e-12);
    }

    #[test]
    fn mean_predictor_has_zero_r2() {
        let truth = [2.0, 4.0, 9.0, 1.0];
        let m = compute_metrics(&[4.0; 4], &truth).unwrap();
        assert_eq!(m.r2, Some(0.0));
    }

    #[test]
    fn bootstrap_intervals_bracket_point_estimates() {
        let mut r = rng(6);
        let truth: Vec<f64> = (0..100).map(|_| r.random_range(0.0..150.0)).collect();
        let pred: Vec<f64> = truth.iter().map(|t| t + r.random_range(-30.0..30.0)).collect();
        let m = compute_metrics(&pred, &truth)
            .unwrap()
            .with_bootstrap(&pred, &truth, 1000, 0.95, 3)
            .unwrap();
        let ci = m.ci.unwrap();
        assert!(ci.rmse.0 < m.rmse && m.rmse < ci.rmse.1);
        assert!(ci.mae.0 < m.mae && m.mae < ci.mae.1);
        let (lo, hi) = ci.r2.unwrap();
        assert!(lo < m.r2.unwrap() && m.r2.unwrap() < hi);
    }

    #[test]
    fn bad_inputs() {
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(compute_metrics(&[f64::NAN], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae_and_scales(
            pairs in prop::collection::vec((-200.0f64..200.0, -200.0f64..200.0), 2..60),
            c in -5.0f64..5.0,
        ) {
            let (pred, truth): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = compute_metrics(&pred, &truth).unwrap();
            prop_assert!(m.rmse + 1e-12 >= m.mae && m.mae >= 0.0);
            if let Some(r2) = m.r2 {
                prop_assert!(r2 <= 1.0);
            }
            let sp: Vec<f64> = pred.iter().map(|v| v * c).collect();
            let st: Vec<f64> = truth.iter().map(|v| v * c).collect();
            let s = compute_metrics(&sp, &st).unwrap();
            prop_assert!((s.rmse - c.abs() * m.rmse).abs() <= 1e-9 * (1.0 + m.rmse));
            prop_assert!((s.mae - c.abs() * m.mae).abs() <= 1e-9 * (1.0 + m.mae));
        }
    }
}
