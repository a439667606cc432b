//! Thin CLI over the library: ingest, export-images, train, eval, predict,
//! gradcheck. Exit codes: 0 success, 2 usage/config, 3 data/format,
//! 4 numeric, 5 I/O.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gaitcnn::commands::{self, EvalSubset};
use gaitcnn::config::RunConfig;
use gaitcnn::error::Error;

#[derive(Parser)]
#[command(name = "gaitcnn", about = "Parkinsonian gait staging from GRF records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    Train,
    Holdout,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, window, and normalize a directory of GRF records into a
    /// dataset container
    Ingest {
        /// Directory of 19-column .txt records
        #[arg(long)]
        data_dir: PathBuf,
        /// Demographics CSV (subject_id, group, cohort, hoehn_yahr)
        #[arg(long)]
        demographics: PathBuf,
        /// Optional JSON manifest for files outside the naming convention
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        window_len: usize,
        #[arg(long, default_value_t = 0)]
        overlap: usize,
    },
    /// Export one spectrogram PNG per dataset window
    ExportImages {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "images")]
        out: PathBuf,
    },
    /// Split, train, and evaluate; writes checkpoint, history, confusion
    /// matrix, and report
    Train {
        /// Config file of key = value lines
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. --set lr=0.0005 (repeatable)
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scale_divisor: Option<usize>,
    },
    /// Evaluate a checkpoint on a dataset side
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "holdout")]
        subset: SubsetArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Predict per-window labels for a raw record and report the majority
    /// verdict
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        record: PathBuf,
    },
    /// Finite-difference gradient checks for every layer
    Gradcheck {
        #[arg(long, default_value_t = 32)]
        scale_divisor: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

fn build_config(
    config: Option<PathBuf>,
    sets: &[String],
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    scale_divisor: Option<usize>,
) -> Result<RunConfig, Error> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(&path)?,
        None => RunConfig::default(),
    };
    for pair in sets {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(d) = dataset {
        cfg.dataset = d;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = scale_divisor {
        cfg.scale_divisor = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Ingest {
            data_dir,
            demographics,
            manifest,
            out,
            window_len,
            overlap,
        } => {
            commands::cmd_ingest(
                &data_dir,
                &demographics,
                manifest.as_deref(),
                &out,
                window_len,
                overlap,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportImages { dataset, out } => {
            commands::cmd_export_images(&dataset, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            config,
            sets,
            dataset,
            out,
            seed,
            scale_divisor,
        } => {
            let cfg = build_config(config, &sets, dataset, out, seed, scale_divisor)?;
            commands::cmd_train(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            checkpoint,
            dataset,
            subset,
            config,
            sets,
        } => {
            let cfg = build_config(config, &sets, None, None, None, None)?;
            let subset = match subset {
                SubsetArg::Train => EvalSubset::Train,
                SubsetArg::Holdout => EvalSubset::Holdout,
                SubsetArg::All => EvalSubset::All,
            };
            commands::cmd_eval(&checkpoint, &dataset, &cfg, subset)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { checkpoint, record } => {
            commands::cmd_predict(&checkpoint, &record)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck {
            scale_divisor,
            trials,
        } => {
            let all_pass = commands::cmd_gradcheck(scale_divisor, trials)?;
            if all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
