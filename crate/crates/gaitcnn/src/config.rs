//! Flat key-value run configuration with documented defaults, file loading,
//! and command-line overrides. Unknown keys are rejected. Every run writes
//! its resolved configuration next to the outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::layers::ModelConfig;
use crate::optim::{AdamHyper, EarlyStopPolicy};
use crate::trainer::{SplitSpec, SplitStrategy, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    pub window_len: usize,
    pub overlap: usize,
    pub train_fraction: f64,
    pub split_strategy: SplitStrategy,
    pub stratified: bool,
    pub scale_divisor: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub target_accuracy: Option<f64>,
    pub target_loss: Option<f64>,
    pub max_epochs: usize,
    pub seed: u64,
    pub deterministic: bool,
    pub class_weighting: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::from("dataset.grfd"),
            out_dir: PathBuf::from("out"),
            window_len: 500,
            overlap: 0,
            train_fraction: 0.8,
            split_strategy: SplitStrategy::ByWindow,
            stratified: true,
            scale_divisor: 1,
            batch_size: 32,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            patience: 3,
            min_delta: 1e-4,
            target_accuracy: Some(0.97),
            target_loss: None,
            max_epochs: 12,
            seed: 0,
            deterministic: true,
            class_weighting: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for key {key:?}")))
}

fn parse_optional(key: &str, value: &str) -> Result<Option<f64>> {
    if value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        Ok(Some(parse(key, value)?))
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "window_len" => self.window_len = parse(key, value)?,
            "overlap" => self.overlap = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "split_strategy" => {
                self.split_strategy = match value {
                    "by_window" => SplitStrategy::ByWindow,
                    "by_subject" => SplitStrategy::BySubject,
                    other => {
                        return Err(Error::Config(format!(
                            "split_strategy must be by_window or by_subject, got {other:?}"
                        )))
                    }
                }
            }
            "stratified" => self.stratified = parse(key, value)?,
            "scale_divisor" => self.scale_divisor = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "min_delta" => self.min_delta = parse(key, value)?,
            "target_accuracy" => self.target_accuracy = parse_optional(key, value)?,
            "target_loss" => self.target_loss = parse_optional(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "deterministic" => self.deterministic = parse(key, value)?,
            "class_weighting" => self.class_weighting = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Load `key = value` lines; '#' starts a comment.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg = RunConfig::default();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config(format!(
                "{}:{}: expected key = value",
                path.display(),
                line_no + 1
            )))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must be in (0,1)".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if let Some(a) = self.target_accuracy {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config("target_accuracy must be in (0,1]".into()));
            }
        }
        if self.batch_size < 1 || self.max_epochs < 1 || self.scale_divisor < 1 {
            return Err(Error::Config("batch_size, max_epochs, scale_divisor must be >= 1".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "dataset = {}", self.dataset.display());
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "window_len = {}", self.window_len);
        let _ = writeln!(s, "overlap = {}", self.overlap);
        let _ = writeln!(s, "train_fraction = {}", self.train_fraction);
        let _ = writeln!(
            s,
            "split_strategy = {}",
            match self.split_strategy {
                SplitStrategy::ByWindow => "by_window",
                SplitStrategy::BySubject => "by_subject",
            }
        );
        let _ = writeln!(s, "stratified = {}", self.stratified);
        let _ = writeln!(s, "scale_divisor = {}", self.scale_divisor);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "beta1 = {}", self.beta1);
        let _ = writeln!(s, "beta2 = {}", self.beta2);
        let _ = writeln!(s, "eps = {}", self.eps);
        let _ = writeln!(s, "patience = {}", self.patience);
        let _ = writeln!(s, "min_delta = {}", self.min_delta);
        let _ = writeln!(s, "target_accuracy = {}", opt(self.target_accuracy));
        let _ = writeln!(s, "target_loss = {}", opt(self.target_loss));
        let _ = writeln!(s, "max_epochs = {}", self.max_epochs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "deterministic = {}", self.deterministic);
        let _ = writeln!(s, "class_weighting = {}", self.class_weighting);
        s
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            scale_divisor: self.scale_divisor,
            input_shape: (self.window_len, 18, 1),
            ..Default::default()
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            strategy: self.split_strategy,
            stratified: self.stratified,
            seed: self.seed,
        }
    }

    pub fn train_config(&self, class_weights: Option<[f64; 4]>) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            adam: AdamHyper {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
            policy: EarlyStopPolicy {
                patience: self.patience,
                min_delta: self.min_delta,
                target_accuracy: self.target_accuracy,
                target_loss: self.target_loss,
                max_epochs: self.max_epochs,
            },
            seed: self.seed,
            class_weights,
        }
    }
}
