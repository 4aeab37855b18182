use std::path::{Path, PathBuf};

use serde::Deserialize;

use fttgru::data::{DataOptions, WindowSpec};
use fttgru::model::{ModelConfig, Variant};
use fttgru::training::TrainConfig;

use crate::Failure;

pub const DATA_DIR_ENV: &str = "CMAPSS_DATA_DIR";

/// Keys accepted in a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub subset: Option<String>,
    pub synthetic: Option<bool>,
    pub synthetic_engines: Option<usize>,
    pub synthetic_seed: Option<u64>,
    pub variant: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub rul_cap: Option<u32>,
    pub fnet_mode: Option<bool>,

    pub seq_len: Option<usize>,
    pub window_overlap: Option<f64>,
    pub d_model: Option<usize>,
    pub n_layers: Option<usize>,
    pub n_heads: Option<usize>,
    pub gru_units: Option<usize>,
    pub ffn_width: Option<usize>,

    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr_max: Option<f64>,
    pub lr_min: Option<f64>,
    pub adam_beta1: Option<f64>,
    pub adam_beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub patience: Option<usize>,
    pub min_delta: Option<f64>,
    pub val_fraction: Option<f64>,

    pub warmup: Option<usize>,
    pub iters: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {}", path.display(), e.message())))
    }
}

/// Values given on the command line; they override the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub variant: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub rul_cap: Option<u32>,
    pub synthetic: bool,
    pub fnet_mode: bool,
}

#[derive(Clone, Debug)]
pub enum DataSource {
    Cmapss { dir: PathBuf, subset: String },
    Synthetic { engines: usize, seed: u64 },
    /// Neither a data directory nor `--synthetic` was given.
    Unset,
}

#[derive(Clone, Debug)]
pub struct AppConfig {
    pub source: DataSource,
    pub out_dir: PathBuf,
    pub variant: Variant,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: DataOptions,
    pub warmup: usize,
    pub iters: usize,
}

impl AppConfig {
    /// Resolution order per key: flag, file, then built-in default. The data
    /// directory additionally falls back to `CMAPSS_DATA_DIR`.
    pub fn resolve(file: FileConfig, flags: Overrides, env_data_dir: Option<PathBuf>) -> Result<Self, Failure> {
        let variant: Variant = flags
            .variant
            .or(file.variant)
            .map_or(Ok(Variant::Hybrid), |s| s.parse())
            .map_err(Failure::from)?;
        let defaults = ModelConfig::default();
        let model = ModelConfig {
            variant,
            seq_len: file.seq_len.unwrap_or(defaults.seq_len),
            n_features: defaults.n_features,
            d_model: file.d_model.unwrap_or(defaults.d_model),
            n_layers: file.n_layers.unwrap_or(defaults.n_layers),
            n_heads: file.n_heads.unwrap_or(defaults.n_heads),
            gru_units: file.gru_units.unwrap_or(defaults.gru_units),
            ffn_width: file.ffn_width.unwrap_or(defaults.ffn_width),
            fnet_mode: flags.fnet_mode || file.fnet_mode.unwrap_or(false),
        };
        model.validate()?;

        let t = TrainConfig::default();
        let rul_cap = flags.rul_cap.or(file.rul_cap);
        let train = TrainConfig {
            epochs: file.epochs.unwrap_or(t.epochs),
            batch_size: file.batch_size.unwrap_or(t.batch_size),
            lr_max: file.lr_max.unwrap_or(t.lr_max),
            lr_min: file.lr_min.unwrap_or(t.lr_min),
            adam_beta1: file.adam_beta1.unwrap_or(t.adam_beta1),
            adam_beta2: file.adam_beta2.unwrap_or(t.adam_beta2),
            adam_eps: file.adam_eps.unwrap_or(t.adam_eps),
            patience: file.patience.unwrap_or(t.patience),
            min_delta: file.min_delta.unwrap_or(t.min_delta),
            seeds: flags.seeds.or(file.seeds).unwrap_or(t.seeds),
            rul_cap,
            val_fraction: file.val_fraction.unwrap_or(t.val_fraction),
        };
        train.validate()?;

        let data = DataOptions {
            window: WindowSpec {
                len: model.seq_len,
                overlap: file.window_overlap.unwrap_or(WindowSpec::default().overlap),
            },
            rul_cap,
            val_fraction: train.val_fraction,
        };
        data.window.validate()?;

        let source = if flags.synthetic || file.synthetic.unwrap_or(false) {
            DataSource::Synthetic {
                engines: file.synthetic_engines.unwrap_or(100),
                seed: file.synthetic_seed.unwrap_or(7),
            }
        } else {
            match flags.data_dir.or(file.data_dir).or(env_data_dir) {
                Some(dir) => DataSource::Cmapss {
                    dir,
                    subset: file.subset.unwrap_or_else(|| "FD001".into()),
                },
                None => DataSource::Unset,
            }
        };
        let iters = file.iters.unwrap_or(1000);
        if iters == 0 {
            return Err(Failure::usage("iters must be at least 1"));
        }
        Ok(AppConfig {
            source,
            out_dir: flags.out_dir.or(file.out_dir).unwrap_or_else(|| "out".into()),
            variant,
            model,
            train,
            data,
            warmup: file.warmup.unwrap_or(100),
            iters,
        })
    }

    pub fn model_for(&self, variant: Variant) -> ModelConfig {
        ModelConfig { variant, ..self.model.clone() }
    }
}
