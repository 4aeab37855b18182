use std::path::{Path, PathBuf};

use serde::Serialize;

use fttgru::artifacts::{
    self, comparison_table, latency_rows, mean_metrics, metrics_rows, normalizer_rows, read_csv,
    window_rows, write_csv, DatasetSummary, LatencyRow, MetricsRow, Scores,
};
use fttgru::data::{load_cmapss, synth_generate, PreparedData, RawDataset};
use fttgru::eval::{bench_latency, evaluate_ensemble, PredictionRow};
use fttgru::model::{load_checkpoint, save_checkpoint, ModelState, Variant};
use fttgru::training::{multi_run, AggregateRow};

use crate::config::{AppConfig, DataSource, DATA_DIR_ENV};
use crate::Failure;

fn load_raw(cfg: &AppConfig) -> Result<(RawDataset, String), Failure> {
    match &cfg.source {
        DataSource::Synthetic { engines, seed } => Ok((
            synth_generate(*engines, *seed)?,
            format!("synthetic({engines} engines, seed {seed})"),
        )),
        DataSource::Cmapss { dir, subset } => Ok((load_cmapss(dir, subset)?, format!("{}/{subset}", dir.display()))),
        DataSource::Unset => Err(Failure::usage(format!(
            "no dataset: pass --data-dir, set data_dir in the config file, set {DATA_DIR_ENV}, or use --synthetic"
        ))),
    }
}

fn prepare_data(cfg: &AppConfig) -> Result<(PreparedData, String), Failure> {
    let (raw, source) = load_raw(cfg)?;
    Ok((PreparedData::new(&raw, cfg.data)?, source))
}

fn run_stem(variant: Variant, run: usize, seed: u64) -> String {
    format!("{variant}_run{run}_seed{seed}")
}

pub fn history_path(out: &Path, variant: Variant, run: usize, seed: u64) -> PathBuf {
    out.join(format!("history_{}.csv", run_stem(variant, run, seed)))
}

pub fn checkpoint_path(out: &Path, variant: Variant, run: usize, seed: u64) -> PathBuf {
    out.join("checkpoints").join(format!("{}.ckpt", run_stem(variant, run, seed)))
}

fn variant_file(out: &Path, kind: &str, variant: Variant) -> PathBuf {
    out.join(format!("{kind}_{variant}.csv"))
}

pub fn prepare(cfg: &AppConfig) -> Result<(), Failure> {
    let (data, source) = prepare_data(cfg)?;
    let dir = cfg.out_dir.join("prepared");
    let summary = DatasetSummary::of(&data, &source);
    write_csv(&dir.join("windows.csv"), artifacts::WINDOWS, &window_rows(&data))?;
    write_csv(&dir.join("summary.csv"), artifacts::SUMMARY, std::slice::from_ref(&summary))?;
    write_csv(&dir.join("normalizer.csv"), artifacts::NORMALIZER, &normalizer_rows(&data.normalizer))?;
    println!(
        "{source}: engines train {} / val {} / test {}; windows train {} / val {} / test {}",
        summary.train_engines,
        summary.val_engines,
        summary.test_engines,
        summary.train_windows,
        summary.val_windows,
        summary.test_windows
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn train_variant(cfg: &AppConfig, data: &PreparedData, variant: Variant) -> Result<Vec<ModelState>, Failure> {
    let out = &cfg.out_dir;
    let report = multi_run(&cfg.model_for(variant), &cfg.train, data)?;
    for (i, run) in report.runs.iter().enumerate() {
        write_csv(&history_path(out, variant, i + 1, run.seed), artifacts::HISTORY, &run.history.epochs)?;
        save_checkpoint(&run.model, &checkpoint_path(out, variant, i + 1, run.seed))?;
        let last = run.history.epochs.last().expect("at least one epoch");
        println!(
            "{variant} seed {}: {} epochs, best epoch {}, final train MSE {:.2}, val MSE {:.2}",
            run.seed,
            run.history.epochs.len(),
            run.history.best_epoch,
            last.train_mse,
            last.val_mse
        );
    }
    write_csv(&variant_file(out, "aggregate", variant), artifacts::AGGREGATE, &report.aggregate)?;
    Ok(report.runs.into_iter().map(|r| r.model).collect())
}

pub fn train(cfg: &AppConfig) -> Result<(), Failure> {
    let (data, _) = prepare_data(cfg)?;
    train_variant(cfg, &data, cfg.variant)?;
    Ok(())
}

fn load_models(cfg: &AppConfig, variant: Variant) -> Result<Vec<ModelState>, Failure> {
    let mut models = Vec::with_capacity(cfg.train.seeds.len());
    for (i, &seed) in cfg.train.seeds.iter().enumerate() {
        let path = checkpoint_path(&cfg.out_dir, variant, i + 1, seed);
        if !path.is_file() {
            return Err(Failure::usage(format!(
                "{}: checkpoint not found (run `train` with the same variant and seeds first)",
                path.display()
            )));
        }
        models.push(load_checkpoint(&path)?);
    }
    Ok(models)
}

fn evaluate_variant(
    cfg: &AppConfig,
    data: &PreparedData,
    variant: Variant,
    models: &[ModelState],
) -> Result<MetricsRow, Failure> {
    let e = evaluate_ensemble(models, &data.test)?;
    let rows = metrics_rows(variant, &cfg.train.seeds, &e.per_model)?;
    write_csv(&variant_file(&cfg.out_dir, "metrics", variant), artifacts::METRICS, &rows)?;
    write_csv(&variant_file(&cfg.out_dir, "predictions", variant), artifacts::PREDICTIONS, &e.predictions)?;
    let m = mean_metrics(&rows).expect("metrics rows carry a mean").clone();
    let r2 = m.r2.map_or("undefined".to_string(), |v| format!("{v:.3}"));
    println!("{variant}: RMSE {:.2}, MAE {:.2}, R² {r2} (mean over {} seeds)", m.rmse, m.mae, models.len());
    for d in e.per_model.iter().flat_map(|r| &r.diagnostics) {
        eprintln!("warning: {d}");
    }
    Ok(m)
}

pub fn evaluate(cfg: &AppConfig) -> Result<(), Failure> {
    let models = load_models(cfg, cfg.variant)?;
    let (data, _) = prepare_data(cfg)?;
    evaluate_variant(cfg, &data, cfg.variant, &models)?;
    Ok(())
}

fn bench_variant(cfg: &AppConfig, model: &ModelState) -> Result<f64, Failure> {
    let seed = cfg.train.seeds[0];
    let r = bench_latency(model, cfg.warmup, cfg.iters, seed)?;
    let variant = model.config().variant;
    write_csv(&variant_file(&cfg.out_dir, "latency", variant), artifacts::LATENCY, &latency_rows(&r))?;
    println!(
        "{variant}: batch 1 mean {:.3} ms, median {:.3} ms; batch 32 {:.0} samples/s ({} thread)",
        r.batch1_mean_ms, r.batch1_median_ms, r.batch32_throughput_per_s, r.thread_count
    );
    Ok(r.batch1_mean_ms)
}

pub fn bench(cfg: &AppConfig) -> Result<(), Failure> {
    let models = load_models(cfg, cfg.variant)?;
    bench_variant(cfg, &models[0])?;
    Ok(())
}

pub fn ablate(cfg: &AppConfig) -> Result<(), Failure> {
    let (data, _) = prepare_data(cfg)?;
    let mut measured = Vec::with_capacity(Variant::ALL.len());
    for variant in Variant::ALL {
        let models = train_variant(cfg, &data, variant)?;
        let m = evaluate_variant(cfg, &data, variant, &models)?;
        let ms = bench_variant(cfg, &models[0])?;
        measured.push((variant, Scores { rmse: m.rmse, mae: m.mae, r2: m.r2, inference_ms: Some(ms) }));
    }
    let path = cfg.out_dir.join("ablation.csv");
    write_csv(&path, artifacts::COMPARISON, &comparison_table(&measured)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    variant: Variant,
    epoch: usize,
    mean_train: f64,
    ci_lo: f64,
    ci_hi: f64,
    mean_val: f64,
    val_ci_lo: f64,
    val_ci_hi: f64,
    runs: usize,
}

impl CurveRow {
    fn new(variant: Variant, r: AggregateRow) -> Self {
        CurveRow {
            variant,
            epoch: r.epoch,
            mean_train: r.mean_train,
            ci_lo: r.ci_lo,
            ci_hi: r.ci_hi,
            mean_val: r.mean_val,
            val_ci_lo: r.val_ci_lo,
            val_ci_hi: r.val_ci_hi,
            runs: r.runs,
        }
    }
}

#[derive(Serialize)]
struct ScatterRow {
    variant: Variant,
    engine: u32,
    truth: f64,
    pred: f64,
    ci_lo: f64,
    ci_hi: f64,
}

/// Merges the per-variant metrics and latency files into one comparison
/// table, and the learning curves and prediction rows into plot-ready files.
pub fn report(cfg: &AppConfig) -> Result<(), Failure> {
    let out = &cfg.out_dir;
    let mut measured = Vec::new();
    let mut curves = Vec::new();
    let mut scatter = Vec::new();
    for variant in Variant::ALL {
        let metrics_path = variant_file(out, "metrics", variant);
        if !metrics_path.is_file() {
            if variant == Variant::Hybrid {
                return Err(Failure::usage(format!(
                    "{}: metrics not found (run `evaluate` or `ablate` first)",
                    metrics_path.display()
                )));
            }
            continue;
        }
        let rows: Vec<MetricsRow> = read_csv(&metrics_path, artifacts::METRICS)?;
        let m = mean_metrics(&rows)
            .ok_or_else(|| Failure::usage(format!("{}: no `mean` row", metrics_path.display())))?;
        let latency_path = variant_file(out, "latency", variant);
        let inference_ms = if latency_path.is_file() {
            let rows: Vec<LatencyRow> = read_csv(&latency_path, artifacts::LATENCY)?;
            rows.iter().find(|r| r.batch == 1).map(|r| r.mean_ms)
        } else {
            None
        };
        measured.push((variant, Scores { rmse: m.rmse, mae: m.mae, r2: m.r2, inference_ms }));

        let aggregate_path = variant_file(out, "aggregate", variant);
        if aggregate_path.is_file() {
            let rows: Vec<AggregateRow> = read_csv(&aggregate_path, artifacts::AGGREGATE)?;
            curves.extend(rows.into_iter().map(|r| CurveRow::new(variant, r)));
        }
        let predictions_path = variant_file(out, "predictions", variant);
        if predictions_path.is_file() {
            let rows: Vec<PredictionRow> = read_csv(&predictions_path, artifacts::PREDICTIONS)?;
            scatter.extend(rows.into_iter().map(|r| ScatterRow {
                variant,
                engine: r.engine,
                truth: r.truth,
                pred: r.pred,
                ci_lo: r.ci_lo,
                ci_hi: r.ci_hi,
            }));
        }
    }
    let table = comparison_table(&measured)?;
    write_csv(&out.join("results.csv"), artifacts::COMPARISON, &table)?;
    write_csv(&out.join("learning_curves.csv"), "learning_curves", &curves)?;
    write_csv(&out.join("scatter.csv"), "scatter", &scatter)?;
    for r in &table {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<34} {:>9.3} {:>9.3} {:>9} {:>9}",
            r.model,
            r.rmse,
            r.mae,
            opt(r.r2),
            opt(r.inference_ms)
        );
    }
    Ok(())
}
