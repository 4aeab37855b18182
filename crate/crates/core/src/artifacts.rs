//! CSV artifacts. Every file opens with a `# schema=<name> v<N>` comment
//! line followed by a header row. Floats are written in shortest round-trip
//! form, so reading a file back yields the exact values that were written.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{feature_names, Normalizer, PreparedData, N_FEATURES};
use crate::error::{Error, Result};
use crate::eval::{LatencyReport, MetricsReport, THROUGHPUT_BATCH};
use crate::model::Variant;
use crate::training::stats::{mean, sample_sd};

pub const SCHEMA_VERSION: u32 = 1;

pub const HISTORY: &str = "history";
pub const AGGREGATE: &str = "aggregate";
pub const METRICS: &str = "metrics";
pub const PREDICTIONS: &str = "predictions";
pub const LATENCY: &str = "latency";
pub const COMPARISON: &str = "comparison";
pub const WINDOWS: &str = "windows";
pub const SUMMARY: &str = "dataset_summary";
pub const NORMALIZER: &str = "normalizer";

fn schema_line(schema: &str) -> String {
    format!("# schema={schema} v{SCHEMA_VERSION}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize + 1);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

/// Writes `rows` under a schema line and header, creating parent
/// directories as needed.
pub fn write_csv<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = schema_line(schema).into_bytes();
    out.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_csv`], rejecting a different schema name
/// or version.
pub fn read_csv<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let expected = schema_line(schema);
    if first.trim_end() != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected `{expected}`, found `{}`", first.trim_end()),
        });
    }
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

/// One line of a metrics file: a single seed, or the `mean` / `sd` summary
/// over seeds (sample SD; no intervals).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub variant: String,
    pub seed: String,
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub rmse_ci_lo: Option<f64>,
    pub rmse_ci_hi: Option<f64>,
    pub mae_ci_lo: Option<f64>,
    pub mae_ci_hi: Option<f64>,
    pub r2_ci_lo: Option<f64>,
    pub r2_ci_hi: Option<f64>,
}

pub const MEAN_ROW: &str = "mean";
pub const SD_ROW: &str = "sd";

fn summary_row(variant: Variant, label: &str, reports: &[MetricsReport], f: fn(&[f64]) -> f64) -> MetricsRow {
    let rmse: Vec<f64> = reports.iter().map(|r| r.rmse).collect();
    let mae: Vec<f64> = reports.iter().map(|r| r.mae).collect();
    let r2: Vec<f64> = reports.iter().filter_map(|r| r.r2).collect();
    MetricsRow {
        model: variant.display_name().into(),
        variant: variant.as_str().into(),
        seed: label.into(),
        rmse: f(&rmse),
        mae: f(&mae),
        r2: (!r2.is_empty()).then(|| f(&r2)),
        rmse_ci_lo: None,
        rmse_ci_hi: None,
        mae_ci_lo: None,
        mae_ci_hi: None,
        r2_ci_lo: None,
        r2_ci_hi: None,
    }
}

/// Per-seed rows followed by the `mean` and `sd` rows.
pub fn metrics_rows(variant: Variant, seeds: &[u64], reports: &[MetricsReport]) -> Result<Vec<MetricsRow>> {
    if seeds.len() != reports.len() {
        return Err(Error::shape(
            "metrics_rows",
            format!("{} seeds for {} reports", seeds.len(), reports.len()),
        ));
    }
    if reports.is_empty() {
        return Err(Error::Empty { op: "metrics_rows" });
    }
    let mut rows: Vec<MetricsRow> = seeds
        .iter()
        .zip(reports)
        .map(|(seed, r)| {
            let ci = r.ci.as_ref();
            MetricsRow {
                model: variant.display_name().into(),
                variant: variant.as_str().into(),
                seed: seed.to_string(),
                rmse: r.rmse,
                mae: r.mae,
                r2: r.r2,
                rmse_ci_lo: ci.map(|c| c.rmse.0),
                rmse_ci_hi: ci.map(|c| c.rmse.1),
                mae_ci_lo: ci.map(|c| c.mae.0),
                mae_ci_hi: ci.map(|c| c.mae.1),
                r2_ci_lo: ci.and_then(|c| c.r2).map(|v| v.0),
                r2_ci_hi: ci.and_then(|c| c.r2).map(|v| v.1),
            }
        })
        .collect();
    rows.push(summary_row(variant, MEAN_ROW, reports, mean));
    rows.push(summary_row(variant, SD_ROW, reports, sample_sd));
    Ok(rows)
}

/// The `mean` row of a metrics file.
pub fn mean_metrics(rows: &[MetricsRow]) -> Option<&MetricsRow> {
    rows.iter().find(|r| r.seed == MEAN_ROW)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub variant: String,
    pub batch: usize,
    /// Wall time of one forward call.
    pub mean_ms: f64,
    pub median_ms: Option<f64>,
    /// Samples per second.
    pub throughput: f64,
}

/// Batch-1 and batch-32 rows of a benchmark. The batch-32 row carries the
/// mean call time implied by its throughput and no median.
pub fn latency_rows(r: &LatencyReport) -> Vec<LatencyRow> {
    vec![
        LatencyRow {
            variant: r.variant.as_str().into(),
            batch: 1,
            mean_ms: r.batch1_mean_ms,
            median_ms: Some(r.batch1_median_ms),
            throughput: 1e3 / r.batch1_mean_ms,
        },
        LatencyRow {
            variant: r.variant.as_str().into(),
            batch: THROUGHPUT_BATCH,
            mean_ms: 1e3 * THROUGHPUT_BATCH as f64 / r.batch32_throughput_per_s,
            median_ms: None,
            throughput: r.batch32_throughput_per_s,
        },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub inference_ms: Option<f64>,
}

/// Published FD001 results of recurrent and convolutional baselines:
/// (name, RMSE, MAE, R², batch-1 inference ms).
pub const PUBLISHED_BASELINES: [(&str, f64, f64, f64, f64); 3] = [
    ("LSTM", 34.25, 21.85, 0.39, 1.30),
    ("Bi-LSTM", 32.67, 20.14, 0.41, 1.91),
    ("TCN-Attention", 31.12, 19.76, 0.44, 2.93),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Published,
    Measured,
    /// Percent improvement of the hybrid over the best published value of
    /// each column (positive is better).
    Improvement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub kind: RowKind,
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub inference_ms: Option<f64>,
}

/// Percent improvement of `s` over the best published baseline in each
/// column: lower is better for RMSE, MAE and latency, higher for R².
pub fn improvement_over_baselines(s: &Scores) -> Scores {
    let col = |i: usize| PUBLISHED_BASELINES.iter().map(move |b| [b.1, b.2, b.3, b.4][i]);
    let lower = |i: usize, v: f64| {
        let best = col(i).fold(f64::INFINITY, f64::min);
        (best - v) / best * 100.0
    };
    let best_r2 = col(2).fold(f64::NEG_INFINITY, f64::max);
    Scores {
        rmse: lower(0, s.rmse),
        mae: lower(1, s.mae),
        r2: s.r2.map(|v| (v - best_r2) / best_r2 * 100.0),
        inference_ms: s.inference_ms.map(|v| lower(3, v)),
    }
}

/// Published baselines, then each measured variant in the given order, then
/// the improvement row of the hybrid computed from the unrounded scores.
pub fn comparison_table(measured: &[(Variant, Scores)]) -> Result<Vec<ComparisonRow>> {
    let hybrid = measured
        .iter()
        .find(|(v, _)| *v == Variant::Hybrid)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::Config("comparison table needs hybrid scores".into()))?;
    let row = |model: &str, kind, s: &Scores| ComparisonRow {
        model: model.into(),
        kind,
        rmse: s.rmse,
        mae: s.mae,
        r2: s.r2,
        inference_ms: s.inference_ms,
    };
    let mut rows: Vec<ComparisonRow> = PUBLISHED_BASELINES
        .iter()
        .map(|&(name, rmse, mae, r2, ms)| {
            let s = Scores { rmse, mae, r2: Some(r2), inference_ms: Some(ms) };
            row(name, RowKind::Published, &s)
        })
        .collect();
    rows.extend(measured.iter().map(|(v, s)| row(v.display_name(), RowKind::Measured, s)));
    rows.push(row(
        "% improvement vs best published",
        RowKind::Improvement,
        &improvement_over_baselines(hybrid),
    ));
    Ok(rows)
}

/// One window of the prepared cache. `start` is negative for left-padded
/// test windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub split: String,
    pub engine: u32,
    pub start: i64,
    pub label: f64,
}

pub fn window_rows(data: &PreparedData) -> Vec<WindowRow> {
    let mut rows = Vec::with_capacity(data.train.len() + data.val.len() + data.test.len());
    for (split, b) in [("train", &data.train), ("val", &data.val), ("test", &data.test)] {
        for i in 0..b.len() {
            rows.push(WindowRow {
                split: split.into(),
                engine: b.engine_ids[i],
                start: b.starts[i],
                label: b.y[i],
            });
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub train_engines: usize,
    pub val_engines: usize,
    pub test_engines: usize,
    pub train_windows: usize,
    pub val_windows: usize,
    pub test_windows: usize,
    pub window_len: usize,
    pub stride: usize,
    pub rul_cap: Option<u32>,
    pub label_min: f64,
    pub label_max: f64,
    pub label_mean: f64,
}

impl DatasetSummary {
    /// Label statistics cover the training split.
    pub fn of(data: &PreparedData, source: &str) -> Self {
        let labels = data.train_label_stats();
        DatasetSummary {
            source: source.into(),
            train_engines: data.train_engines,
            val_engines: data.val_engines,
            test_engines: data.test_engines,
            train_windows: data.train.len(),
            val_windows: data.val.len(),
            test_windows: data.test.len(),
            window_len: data.options.window.len,
            stride: data.options.window.stride(),
            rul_cap: data.options.rul_cap,
            label_min: labels.min,
            label_max: labels.max,
            label_mean: labels.mean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizerRow {
    pub feature: String,
    pub min: f64,
    pub max: f64,
}

pub fn normalizer_rows(n: &Normalizer) -> Vec<NormalizerRow> {
    feature_names()
        .into_iter()
        .zip(n.min().iter().zip(n.max()))
        .map(|(feature, (&min, &max))| NormalizerRow { feature, min, max })
        .collect()
}

pub fn normalizer_from_rows(rows: &[NormalizerRow]) -> Result<Normalizer> {
    if rows.len() != N_FEATURES {
        return Err(Error::Data(format!(
            "normalizer has {} features, expected {N_FEATURES}",
            rows.len()
        )));
    }
    let mut min = [0.0; N_FEATURES];
    let mut max = [0.0; N_FEATURES];
    for (i, r) in rows.iter().enumerate() {
        min[i] = r.min;
        max[i] = r.max;
    }
    Normalizer::from_bounds(min, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, DataOptions};
    use crate::eval::compute_metrics;
    use crate::training::{EpochRecord, RunHistory};

    #[test]
    fn history_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/history.csv");
        let h = RunHistory {
            epochs: vec![
                EpochRecord { epoch: 1, train_mse: 1.0 / 3.0, val_mse: 2e-17, lr: 1e-3, seconds: 0.25 },
                EpochRecord { epoch: 2, train_mse: 1234.5678901234567, val_mse: 0.1, lr: 5.05e-4, seconds: 1.0 },
            ],
            best_epoch: 2,
            stopped_early: false,
        };
        write_csv(&path, HISTORY, &h.epochs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# schema=history v1"));
        assert_eq!(lines.next(), Some("epoch,train_mse,val_mse,lr,seconds"));
        let back: Vec<EpochRecord> = read_csv(&path, HISTORY).unwrap();
        assert_eq!(back, h.epochs);
    }

    #[test]
    fn wrong_schema_or_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&path, LATENCY, &[NormalizerRow { feature: "x".into(), min: 0.0, max: 1.0 }]).unwrap();
        assert!(matches!(read_csv::<NormalizerRow>(&path, NORMALIZER), Err(Error::Parse { line: 1, .. })));
        let missing = dir.path().join("none.csv");
        assert!(matches!(read_csv::<NormalizerRow>(&missing, NORMALIZER), Err(Error::Io { .. })));
    }

    #[test]
    fn bad_field_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.csv");
        std::fs::write(&path, "# schema=normalizer v1\nfeature,min,max\na,0,1\nb,zero,1\n").unwrap();
        match read_csv::<NormalizerRow>(&path, NORMALIZER) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn metrics_rows_summarize_seeds() {
        let a = compute_metrics(&[1.0, 3.0], &[0.0, 4.0]).unwrap();
        let b = compute_metrics(&[0.0, 4.0], &[0.0, 4.0]).unwrap();
        let rows = metrics_rows(Variant::GruOnly, &[7, 8], &[a, b]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].seed, "7");
        let m = mean_metrics(&rows).unwrap();
        assert_eq!((m.rmse, m.mae), (0.5, 0.5));
        assert_eq!(m.r2, Some((0.75 + 1.0) / 2.0));
        let sd = &rows[3];
        assert_eq!(sd.seed, SD_ROW);
        assert!((sd.rmse - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(metrics_rows(Variant::Hybrid, &[1], &[]).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_csv(&path, METRICS, &rows).unwrap();
        assert_eq!(read_csv::<MetricsRow>(&path, METRICS).unwrap(), rows);
    }

    #[test]
    fn improvement_matches_hand_computation() {
        let s = Scores { rmse: 30.0, mae: 18.0, r2: Some(0.5), inference_ms: Some(1.0) };
        let imp = improvement_over_baselines(&s);
        assert!((imp.rmse - (31.12 - 30.0) / 31.12 * 100.0).abs() < 1e-12);
        assert!((imp.mae - (19.76 - 18.0) / 19.76 * 100.0).abs() < 1e-12);
        assert!((imp.r2.unwrap() - (0.5 - 0.44) / 0.44 * 100.0).abs() < 1e-12);
        assert!((imp.inference_ms.unwrap() - (1.30 - 1.0) / 1.30 * 100.0).abs() < 1e-12);

        // the published table's RMSE and MAE improvements
        let h = Scores { rmse: 30.76, mae: 18.97, r2: None, inference_ms: None };
        let imp = improvement_over_baselines(&h);
        assert_eq!(format!("{:.2}", imp.rmse), "1.16");
        assert_eq!(format!("{:.2}", imp.mae), "4.00");
        assert_eq!((imp.r2, imp.inference_ms), (None, None));
    }

    #[test]
    fn comparison_table_layout() {
        let s = |rmse| Scores { rmse, mae: 20.0, r2: Some(0.4), inference_ms: Some(0.5) };
        let rows = comparison_table(&[
            (Variant::Hybrid, s(30.0)),
            (Variant::GruOnly, s(38.0)),
            (Variant::FttOnly, s(33.0)),
        ])
        .unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(
            names[..6],
            ["LSTM", "Bi-LSTM", "TCN-Attention", "FTT-GRU", "GRU-only", "FTT-only"]
        );
        assert_eq!(rows[6].kind, RowKind::Improvement);
        assert_eq!(rows[6].rmse, improvement_over_baselines(&s(30.0)).rmse);
        assert!(comparison_table(&[(Variant::GruOnly, s(38.0))]).is_err());
    }

    #[test]
    fn prepared_artifacts() {
        let data = PreparedData::new(&synth_generate(10, 3).unwrap(), DataOptions::default()).unwrap();
        let rows = window_rows(&data);
        assert_eq!(rows.len(), data.train.len() + data.val.len() + data.test.len());
        assert_eq!(rows.iter().filter(|r| r.split == "test").count(), 10);
        let s = DatasetSummary::of(&data, "synthetic");
        assert_eq!((s.train_engines, s.val_engines, s.test_engines), (9, 1, 10));
        assert_eq!(s.train_windows, data.train.len());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("norm.csv");
        write_csv(&path, NORMALIZER, &normalizer_rows(&data.normalizer)).unwrap();
        let back = normalizer_from_rows(&read_csv(&path, NORMALIZER).unwrap()).unwrap();
        assert_eq!(back, data.normalizer);
        assert!(normalizer_from_rows(&[]).is_err());
    }
}
