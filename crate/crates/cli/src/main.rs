//! `fttgru`: prepare data, train, evaluate, ablate, benchmark and report.
//!
//! Exit codes: 0 on success, 2 for missing inputs or invalid configuration,
//! 1 for failures while running.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{AppConfig, FileConfig, Overrides, DATA_DIR_ENV};

#[derive(Parser)]
#[command(name = "fttgru", version, about = "Remaining-useful-life models for CMAPSS turbofan data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Validate the dataset, fit the normalizer and write the window cache.
    Prepare,
    /// Train one variant for every seed; write histories and checkpoints.
    Train,
    /// Score trained checkpoints on the test split.
    Evaluate,
    /// Train, evaluate and benchmark all three variants under shared seeds.
    Ablate,
    /// Measure inference latency and throughput of a trained checkpoint.
    Bench,
    /// Merge metrics, latency, curves and predictions into summary files.
    Report,
}

#[derive(Args)]
struct Common {
    /// TOML file of flat key = value settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding train_FD001.txt, test_FD001.txt and RUL_FD001.txt
    /// [fallback: $CMAPSS_DATA_DIR].
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// hybrid, gru_only or ftt_only [default: hybrid].
    #[arg(long, global = true)]
    variant: Option<String>,
    /// One run per seed [default: 42 43 44].
    #[arg(long, global = true, num_args = 1..)]
    seeds: Option<Vec<u64>>,
    /// Clamp RUL labels at this many cycles.
    #[arg(long, global = true)]
    rul_cap: Option<u32>,
    /// Use the generated degradation fleet instead of CMAPSS files.
    #[arg(long, global = true)]
    synthetic: bool,
    /// Plain Fourier mixing (real part of a 2-D FFT) instead of the learned
    /// spectral filter.
    #[arg(long, global = true)]
    fnet_mode: bool,
}

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn input_error(e: &fttgru::Error) -> bool {
    use fttgru::Error;
    match e {
        Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
        Error::Config(_) | Error::Parse { .. } | Error::Checkpoint(_) => true,
        Error::Run { source, .. } => input_error(source),
        _ => false,
    }
}

impl From<fttgru::Error> for Failure {
    fn from(e: fttgru::Error) -> Self {
        Failure {
            code: if input_error(&e) { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = cli.common;
    let file = match &c.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        data_dir: c.data_dir,
        out_dir: c.out_dir,
        variant: c.variant,
        seeds: c.seeds,
        rul_cap: c.rul_cap,
        synthetic: c.synthetic,
        fnet_mode: c.fnet_mode,
    };
    let env_dir = std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let cfg = AppConfig::resolve(file, flags, env_dir)?;
    match cli.command {
        Command::Prepare => commands::prepare(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Ablate => commands::ablate(&cfg),
        Command::Bench => commands::bench(&cfg),
        Command::Report => commands::report(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
