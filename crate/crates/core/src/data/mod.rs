//! Turbofan run-to-failure data: CMAPSS parsing, RUL labels, min–max
//! scaling, sliding windows, and a synthetic fleet for dataset-free runs.

mod cmapss;
mod normalize;
mod synthetic;
mod windows;

use std::path::{Path, PathBuf};

pub use cmapss::{
    feature_names, label_rul, parse_cmapss, parse_cmapss_str, parse_rul_file, write_cmapss,
    write_rul_file, EngineSeries, N_FEATURES, N_SENSORS, N_SETTINGS,
};
pub use normalize::Normalizer;
pub use synthetic::{synth_generate, MAX_LIFETIME, MIN_LIFETIME};
pub use windows::{make_test_windows, make_train_windows, WindowBatch, WindowSpec};

use crate::error::{Error, Result};

/// Raw train/test series and the test ground truth, before windowing.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub train: Vec<EngineSeries>,
    pub test: Vec<EngineSeries>,
    pub test_rul: Vec<u32>,
}

/// The three files of one CMAPSS subset inside `dir`.
pub fn cmapss_paths(dir: &Path, subset: &str) -> [PathBuf; 3] {
    [
        dir.join(format!("train_{subset}.txt")),
        dir.join(format!("test_{subset}.txt")),
        dir.join(format!("RUL_{subset}.txt")),
    ]
}

/// Loads `train_<subset>.txt`, `test_<subset>.txt` and `RUL_<subset>.txt`.
pub fn load_cmapss(dir: &Path, subset: &str) -> Result<RawDataset> {
    let [train, test, rul] = cmapss_paths(dir, subset);
    for p in [&train, &test, &rul] {
        if !p.is_file() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
            ));
        }
    }
    Ok(RawDataset {
        train: parse_cmapss(&train)?,
        test: parse_cmapss(&test)?,
        test_rul: parse_rul_file(&rul)?,
    })
}

/// Writes a dataset in the CMAPSS file layout under `dir`.
pub fn write_dataset(data: &RawDataset, dir: &Path, subset: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let [train, test, rul] = cmapss_paths(dir, subset);
    write_cmapss(&data.train, &train)?;
    write_cmapss(&data.test, &test)?;
    write_rul_file(&data.test_rul, &rul)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataOptions {
    pub window: WindowSpec,
    pub rul_cap: Option<u32>,
    pub val_fraction: f64,
}

impl Default for DataOptions {
    fn default() -> Self {
        DataOptions {
            window: WindowSpec::default(),
            rul_cap: None,
            val_fraction: 0.1,
        }
    }
}

/// Number of training engines held out for validation: `ceil(fraction · n)`,
/// kept within `1..n`.
pub fn validation_count(n_engines: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("val_fraction {fraction} is outside (0, 1)")));
    }
    if n_engines < 2 {
        return Err(Error::Data(format!(
            "need at least 2 training engines to hold out validation, found {n_engines}"
        )));
    }
    Ok(((fraction * n_engines as f64).ceil() as usize).clamp(1, n_engines - 1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl LabelStats {
    fn of(y: &[f64]) -> Self {
        LabelStats {
            min: y.iter().copied().fold(f64::INFINITY, f64::min),
            max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: y.iter().sum::<f64>() / y.len() as f64,
        }
    }
}

/// Windowed splits ready for training and evaluation.
///
/// The last engines of the training file (by unit id) form the validation
/// split; the normalizer is fitted on the whole training file.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub normalizer: Normalizer,
    pub options: DataOptions,
    pub train: WindowBatch,
    pub val: WindowBatch,
    pub test: WindowBatch,
    pub train_engines: usize,
    pub val_engines: usize,
    pub test_engines: usize,
}

impl PreparedData {
    pub fn new(raw: &RawDataset, options: DataOptions) -> Result<Self> {
        options.window.validate()?;
        let normalizer = Normalizer::fit(&raw.train)?;
        let n_val = validation_count(raw.train.len(), options.val_fraction)?;
        let (fit, held) = raw.train.split_at(raw.train.len() - n_val);
        let train = make_train_windows(fit, &normalizer, options.window, options.rul_cap)?;
        let val = make_train_windows(held, &normalizer, options.window, options.rul_cap)?;
        let test = make_test_windows(&raw.test, &raw.test_rul, &normalizer, options.window.len, options.rul_cap)?;
        Ok(PreparedData {
            normalizer,
            options,
            train,
            val,
            test,
            train_engines: fit.len(),
            val_engines: held.len(),
            test_engines: raw.test.len(),
        })
    }

    pub fn train_label_stats(&self) -> LabelStats {
        LabelStats::of(&self.train.y)
    }
}
