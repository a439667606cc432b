//! The operations behind each CLI subcommand, kept in the library so the
//! binary stays a thin argument parser. All outputs land under the run's
//! output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::gradcheck;
use crate::ingest::{
    self, build_dataset, load_manifest, normalize_window, parse_record, read_dataset,
    resample_to_100hz, window_record, BuildOptions, ClassLabel, Demographics, LabeledDataset,
};
use crate::layers::{read_checkpoint, write_checkpoint, Network};
use crate::metrics::report;
use crate::spectrogram::export_spectrogram;
use crate::trainer::{evaluate, predict, split_dataset, train};

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parse, label, window, and normalize a record directory; write the
/// dataset container plus count summaries.
pub fn cmd_ingest(
    data_dir: &Path,
    demographics_path: &Path,
    manifest_path: Option<&Path>,
    out_dir: &Path,
    window_len: usize,
    overlap: usize,
) -> Result<LabeledDataset> {
    if !demographics_path.is_file() {
        return Err(Error::Config(format!(
            "demographics file {} not found",
            demographics_path.display()
        )));
    }
    if !data_dir.is_dir() {
        return Err(Error::Config(format!(
            "data directory {} not found",
            data_dir.display()
        )));
    }
    let demo_text = fs::read_to_string(demographics_path)
        .map_err(|e| Error::io(demographics_path.display().to_string(), e))?;
    let demographics = Demographics::from_csv(&demo_text, &demographics_path.display().to_string())?;
    let manifest = match manifest_path {
        Some(p) => Some(load_manifest(p)?),
        None => None,
    };
    let options = BuildOptions { window_len, overlap };
    let ds = build_dataset(data_dir, &demographics, manifest.as_ref(), &options, |msg| {
        eprintln!("warning: {msg}");
    })?;
    ensure_dir(out_dir)?;
    ingest::write_dataset(&ds, &out_dir.join("dataset.grfd"))?;
    write_text(&out_dir.join("summary.txt"), &ds.summary_text())?;
    write_text(&out_dir.join("summary.csv"), &ds.summary_csv())?;
    print!("{}", ds.summary_text());
    Ok(ds)
}

/// Split, train, and evaluate; write the best checkpoint, the history CSV,
/// the confusion matrix CSV, the metrics report, and the resolved config.
pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let ds = read_dataset(&cfg.dataset)?;
    let split = split_dataset(&ds, &cfg.split_spec())?;
    let class_weights = if cfg.class_weighting {
        Some(inverse_frequency_weights(&ds))
    } else {
        None
    };
    let mut net = Network::init(cfg.model_config(), cfg.seed)?;
    let train_cfg = cfg.train_config(class_weights);
    let history = train(&mut net, &ds, &split, &train_cfg, |record| {
        eprintln!(
            "epoch {:>3}: train loss {:.4} acc {:.4} | val loss {:.4} acc {:.4} ({:.1}s)",
            record.epoch,
            record.train_loss,
            record.train_accuracy,
            record.val_loss,
            record.val_accuracy,
            record.wall_seconds
        );
    })?;
    eprintln!("stopped: {}", history.stop_reason.name());

    ensure_dir(&cfg.out_dir)?;
    write_checkpoint(&net, &cfg.out_dir.join("checkpoint.ckpt"))?;
    write_text(&cfg.out_dir.join("history.csv"), &history.to_csv())?;
    let (cm, _) = evaluate(&mut net, &ds, &split.holdout)?;
    write_text(&cfg.out_dir.join("confusion.csv"), &cm.to_csv())?;
    let rep = report(&cm)?;
    write_text(&cfg.out_dir.join("report.txt"), &rep.to_text())?;
    write_text(&cfg.out_dir.join("report.csv"), &rep.to_csv())?;
    write_text(&cfg.out_dir.join("resolved_config.txt"), &cfg.to_text())?;
    print!("{}", rep.to_text());
    Ok(())
}

fn inverse_frequency_weights(ds: &LabeledDataset) -> [f64; 4] {
    let counts = ds.class_counts();
    let total: u64 = counts.iter().sum();
    let mut weights = [0.0; 4];
    for (w, &c) in weights.iter_mut().zip(&counts) {
        *w = if c > 0 { total as f64 / (4.0 * c as f64) } else { 0.0 };
    }
    weights
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSubset {
    Train,
    Holdout,
    All,
}

/// Evaluate a checkpoint on a dataset side and print the metrics report.
pub fn cmd_eval(checkpoint: &Path, dataset: &Path, cfg: &RunConfig, subset: EvalSubset) -> Result<()> {
    let mut net = read_checkpoint(checkpoint)?;
    let ds = read_dataset(dataset)?;
    let indices: Vec<usize> = match subset {
        EvalSubset::All => (0..ds.windows.len()).collect(),
        _ => {
            let split = split_dataset(&ds, &cfg.split_spec())?;
            match subset {
                EvalSubset::Train => split.train,
                _ => split.holdout,
            }
        }
    };
    let (cm, mean_loss) = evaluate(&mut net, &ds, &indices)?;
    let rep = report(&cm)?;
    print!("{}", rep.to_text());
    println!("mean loss: {mean_loss:.6}");
    ensure_dir(&cfg.out_dir)?;
    write_text(&cfg.out_dir.join("confusion.csv"), &cm.to_csv())?;
    write_text(&cfg.out_dir.join("report.csv"), &rep.to_csv())?;
    Ok(())
}

/// Window and normalize one raw record, predict per window, and report the
/// modal class with its frequency.
pub fn cmd_predict(checkpoint: &Path, record_path: &Path) -> Result<(ClassLabel, usize, usize)> {
    let mut net = read_checkpoint(checkpoint)?;
    let name = record_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file =
        fs::File::open(record_path).map_err(|e| Error::io(record_path.display().to_string(), e))?;
    let record = resample_to_100hz(parse_record(file, &name)?);
    let window_len = net.config.input_shape.0;
    // labels are unknown at prediction time; the placeholder is never read
    let windows = window_record(&record, ClassLabel::Healthy, window_len, 0)?;
    if windows.is_empty() {
        return Err(Error::Data(format!(
            "record has fewer than {window_len} frames; nothing to predict"
        )));
    }
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    let total = windows.len();
    for w in windows {
        let w = normalize_window(w)?;
        let (label, probs) = predict(&mut net, &w)?;
        println!(
            "window {:>3}: {} (probs: {})",
            w.window_index,
            label.name(),
            probs
                .iter()
                .map(|p| format!("{p:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        *votes.entry(label.index()).or_default() += 1;
    }
    // modal class; ties go to the lowest class index via BTreeMap order
    let (&best_class, &best_votes) = votes.iter().max_by_key(|(c, v)| (**v, std::cmp::Reverse(**c))).unwrap();
    let verdict = ClassLabel::from_index(best_class).unwrap();
    println!("verdict: {} ({best_votes}/{total})", verdict.name());
    Ok((verdict, best_votes, total))
}

/// Export one spectrogram PNG per window in the dataset.
pub fn cmd_export_images(dataset: &Path, out_dir: &Path) -> Result<usize> {
    let ds = read_dataset(dataset)?;
    ensure_dir(out_dir)?;
    for (i, w) in ds.windows.iter().enumerate() {
        let name = format!("{i:05}_{}_{}_{:03}.png", w.subject_id, w.label.name(), w.window_index);
        export_spectrogram(w, &out_dir.join(name))?;
    }
    println!("exported {} spectrograms to {}", ds.windows.len(), out_dir.display());
    Ok(ds.windows.len())
}

/// Run the finite-difference suite; returns whether every layer passed.
pub fn cmd_gradcheck(scale_divisor: usize, trials: usize) -> Result<bool> {
    let outcomes = gradcheck::run_all(trials, scale_divisor)?;
    println!(
        "{:<14} {:>7} {:>14} {:>11} {:>7}",
        "layer", "trials", "max_rel_err", "tolerance", "result"
    );
    let mut all_pass = true;
    for o in &outcomes {
        println!(
            "{:<14} {:>7} {:>14.3e} {:>11.0e} {:>7}",
            o.layer,
            o.trials,
            o.max_rel_err,
            o.tolerance,
            if o.pass { "pass" } else { "FAIL" }
        );
        all_pass &= o.pass;
    }
    Ok(all_pass)
}
