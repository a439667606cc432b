//! Dataset splitting, the shuffled mini-batch training loop, history
//! recording, and evaluation.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{ClassLabel, GrfWindow, LabeledDataset};
use crate::layers::{cross_entropy, Network, NetworkGrads};
use crate::metrics::ConfusionMatrix;
use crate::optim::{adam_step, early_stop_check, AdamHyper, AdamState, Decision, EarlyStopPolicy, StopReason};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    ByWindow,
    BySubject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub strategy: SplitStrategy,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            strategy: SplitStrategy::ByWindow,
            stratified: true,
            seed: 0,
        }
    }
}

/// Index partition of a dataset into train and holdout sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
}

/// Partition a dataset. By-window stratified sends floor(fraction * n) of
/// each class to train; by-subject keeps whole subjects on one side,
/// targeting the window fraction as closely as achievable.
pub fn split_dataset(ds: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must be in (0,1), got {}",
            spec.train_fraction
        )));
    }
    if ds.windows.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    let mut split = match spec.strategy {
        SplitStrategy::ByWindow => split_by_window(ds, spec)?,
        SplitStrategy::BySubject => split_by_subject(ds, spec)?,
    };
    split.train.sort_unstable();
    split.holdout.sort_unstable();
    if split.train.is_empty() || split.holdout.is_empty() {
        return Err(Error::Data("degenerate split: one side is empty".into()));
    }
    Ok(split)
}

fn split_by_window(ds: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    if spec.stratified {
        for (c, label) in ClassLabel::ALL.iter().enumerate() {
            let mut indices: Vec<usize> = ds
                .windows
                .iter()
                .enumerate()
                .filter(|(_, w)| w.label == *label)
                .map(|(i, _)| i)
                .collect();
            if indices.is_empty() {
                continue;
            }
            if indices.len() < 2 {
                return Err(Error::Data(format!(
                    "class {} has fewer than 2 windows",
                    label.name()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(c as u64));
            indices.shuffle(&mut rng);
            let n_train = ((spec.train_fraction * indices.len() as f64).floor() as usize).max(1);
            train.extend_from_slice(&indices[..n_train]);
            holdout.extend_from_slice(&indices[n_train..]);
        }
    } else {
        let mut indices: Vec<usize> = (0..ds.windows.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        indices.shuffle(&mut rng);
        let n_train = ((spec.train_fraction * indices.len() as f64).floor() as usize).max(1);
        train.extend_from_slice(&indices[..n_train]);
        holdout.extend_from_slice(&indices[n_train..]);
    }
    Ok(Split { train, holdout })
}

fn split_by_subject(ds: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    // subjects grouped per class; each class needs >= 2 so both sides get one
    let mut per_class: BTreeMap<(usize, String), Vec<usize>> = BTreeMap::new();
    for (i, w) in ds.windows.iter().enumerate() {
        per_class
            .entry((w.label.index(), w.subject_id.clone()))
            .or_default()
            .push(i);
    }
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for (c, label) in ClassLabel::ALL.iter().enumerate() {
        let mut subjects: Vec<(String, Vec<usize>)> = per_class
            .iter()
            .filter(|((ci, _), _)| *ci == c)
            .map(|((_, s), idx)| (s.clone(), idx.clone()))
            .collect();
        if subjects.is_empty() {
            continue;
        }
        if subjects.len() < 2 {
            return Err(Error::Data(format!(
                "class {} has fewer than 2 subjects",
                label.name()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(c as u64));
        subjects.shuffle(&mut rng);
        let total: usize = subjects.iter().map(|(_, idx)| idx.len()).sum();
        let target = spec.train_fraction * total as f64;
        let mut assigned = 0usize;
        let mut cut = 0usize;
        // greedy prefix closest to the target window fraction, keeping at
        // least one subject on each side
        for (i, (_, idx)) in subjects.iter().enumerate() {
            if i + 1 == subjects.len() {
                break;
            }
            let with = assigned + idx.len();
            if (with as f64 - target).abs() <= (assigned as f64 - target).abs() || i == 0 {
                assigned = with;
                cut = i + 1;
            } else {
                break;
            }
        }
        for (i, (_, idx)) in subjects.iter().enumerate() {
            if i < cut {
                train.extend_from_slice(idx);
            } else {
                holdout.extend_from_slice(idx);
            }
        }
    }
    Ok(Split { train, holdout })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
}

impl TrainHistory {
    /// CSV with the per-epoch loss/accuracy curves.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{:.12},{:.12},{:.12},{:.12}\n",
                e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
            ));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub adam: AdamHyper,
    pub policy: EarlyStopPolicy,
    pub seed: u64,
    /// Optional inverse-frequency loss weights per class.
    pub class_weights: Option<[f64; 4]>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            adam: AdamHyper::default(),
            policy: EarlyStopPolicy::default(),
            seed: 0,
            class_weights: None,
        }
    }
}

fn window_input(w: &GrfWindow) -> Result<Tensor> {
    let shape = w.matrix.shape();
    w.matrix.clone().reshape(vec![shape[0], shape[1], 1])
}

/// Train with seeded per-epoch reshuffles and mini-batch mean gradients,
/// recording full-pass train/holdout metrics each epoch. Returns the
/// weights from the best holdout-loss epoch.
pub fn train(
    net: &mut Network,
    ds: &LabeledDataset,
    split: &Split,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<TrainHistory> {
    if split.train.is_empty() || split.holdout.is_empty() {
        return Err(Error::Data("train and holdout sets must be non-empty".into()));
    }
    let mut state = AdamState::new(net, cfg.adam);
    let mut grads_sum = NetworkGrads::zeros_like(net);
    let mut history: Vec<EpochRecord> = Vec::new();
    let mut loss_acc_curve: Vec<(f64, f64)> = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_weights: Option<Vec<Tensor>> = None;
    let mut stop_reason = StopReason::MaxEpochs;

    let mut order: Vec<usize> = split.train.clone();
    for epoch in 1..=cfg.policy.max_epochs {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64));
        order.shuffle(&mut rng);
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads_sum.zero();
            for &i in batch {
                let w = &ds.windows[i];
                let x = window_input(w)?;
                net.forward(&x)?;
                let loss = net.loss(&w.label.one_hot())?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite loss at epoch {epoch}, batch {batch_no}, window {}/{}",
                        w.subject_id, w.window_index
                    )));
                }
                let mut g = net.backward(&w.label.one_hot())?;
                if let Some(weights) = cfg.class_weights {
                    g.scale(weights[w.label.index()]);
                }
                grads_sum.add_assign(&g);
            }
            grads_sum.scale(1.0 / batch.len() as f64);
            adam_step(net, &grads_sum, &mut state)?;
        }

        let (train_cm, train_loss) = evaluate(net, ds, &split.train)?;
        let (val_cm, val_loss) = evaluate(net, ds, &split.holdout)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            train_accuracy: train_cm.accuracy()?,
            val_loss,
            val_accuracy: val_cm.accuracy()?,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        progress(&record);
        loss_acc_curve.push((val_loss, record.val_accuracy));
        if val_loss < best_loss {
            best_loss = val_loss;
            best_weights = Some(net.params().iter().map(|p| (*p).clone()).collect());
        }
        history.push(record);
        if let Decision::Stop(reason) = early_stop_check(&cfg.policy, &loss_acc_curve) {
            stop_reason = reason;
            break;
        }
    }

    // checkpoint-best restore
    if let Some(best) = best_weights {
        for (slot, saved) in net.params_mut().into_iter().zip(best) {
            *slot = saved;
        }
    }
    Ok(TrainHistory {
        epochs: history,
        stop_reason,
    })
}

/// Tally argmax predictions against true labels; also returns the mean
/// cross-entropy loss over the set.
pub fn evaluate(net: &mut Network, ds: &LabeledDataset, indices: &[usize]) -> Result<(ConfusionMatrix, f64)> {
    if indices.is_empty() {
        return Err(Error::Data("cannot evaluate an empty set".into()));
    }
    let mut cm = ConfusionMatrix::new();
    let mut total_loss = 0.0;
    for &i in indices {
        let w = &ds.windows[i];
        let (label, probs) = predict(net, w)?;
        total_loss += cross_entropy(&probs, &w.label.one_hot());
        cm.record(w.label, label);
    }
    Ok((cm, total_loss / indices.len() as f64))
}

/// Argmax class prediction for one window; ties go to the lowest index.
pub fn predict(net: &mut Network, w: &GrfWindow) -> Result<(ClassLabel, Vec<f64>)> {
    let x = window_input(w)?;
    let probs = net.forward(&x)?;
    Ok((argmax_label(&probs), probs))
}

pub fn argmax_label(probs: &[f64]) -> ClassLabel {
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    ClassLabel::from_index(best).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::normalize_window;
    use rand::Rng;

    fn make_dataset(per_class: usize, subjects_per_class: usize, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut windows = Vec::new();
        for label in ClassLabel::ALL {
            for i in 0..per_class {
                let data: Vec<f64> = (0..20 * 18).map(|_| rng.gen_range(0.0..10.0)).collect();
                let w = GrfWindow {
                    matrix: Tensor::new(vec![20, 18], data).unwrap(),
                    label,
                    subject_id: format!("{}S{:02}", label.name(), i % subjects_per_class),
                    window_index: (i / subjects_per_class) as u32,
                    normalized: false,
                };
                windows.push(normalize_window(w).unwrap());
            }
        }
        LabeledDataset {
            windows,
            source: "test".into(),
            digest: [0u8; 32],
        }
    }

    #[test]
    fn stratified_split_counts() {
        let ds = make_dataset(10, 2, 1);
        let split = split_dataset(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(split.train.len(), 32);
        assert_eq!(split.holdout.len(), 8);
        // disjoint and exhaustive
        let mut all: Vec<usize> = split.train.iter().chain(&split.holdout).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_split_paper_class_count() {
        // floor(0.8 * 2084) = 1667 train, 417 holdout
        assert_eq!((0.8f64 * 2084.0).floor() as usize, 1667);
        assert_eq!(2084 - 1667, 417);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = make_dataset(10, 2, 1);
        let spec = SplitSpec { seed: 99, ..Default::default() };
        assert_eq!(split_dataset(&ds, &spec).unwrap(), split_dataset(&ds, &spec).unwrap());
    }

    #[test]
    fn split_rejects_tiny_class() {
        let mut ds = make_dataset(5, 1, 2);
        ds.windows.retain(|w| w.label != ClassLabel::Pd3 || w.window_index == 0);
        let err = split_dataset(&ds, &SplitSpec::default()).unwrap_err();
        assert!(err.to_string().contains("PD3"));
    }

    #[test]
    fn by_subject_split_disjoint_subjects() {
        let ds = make_dataset(12, 4, 3);
        let spec = SplitSpec {
            strategy: SplitStrategy::BySubject,
            ..Default::default()
        };
        let split = split_dataset(&ds, &spec).unwrap();
        let subj = |idx: &[usize]| -> std::collections::BTreeSet<String> {
            idx.iter().map(|&i| ds.windows[i].subject_id.clone()).collect()
        };
        let train_subjects = subj(&split.train);
        let holdout_subjects = subj(&split.holdout);
        assert!(train_subjects.is_disjoint(&holdout_subjects));
        assert_eq!(split.train.len() + split.holdout.len(), ds.windows.len());
    }

    #[test]
    fn predict_argmax_and_ties() {
        assert_eq!(argmax_label(&[0.1, 0.7, 0.1, 0.1]), ClassLabel::Pd2);
        assert_eq!(argmax_label(&[0.25, 0.25, 0.25, 0.25]), ClassLabel::Healthy);
    }

    #[test]
    fn evaluate_conserves_counts() {
        let ds = make_dataset(3, 1, 4);
        let cfg = crate::layers::ModelConfig {
            input_shape: (20, 18, 1),
            scale_divisor: 128,
            ..Default::default()
        };
        let mut net = Network::init(cfg, 7).unwrap();
        let indices: Vec<usize> = (0..ds.windows.len()).collect();
        let (cm, loss) = evaluate(&mut net, &ds, &indices).unwrap();
        assert_eq!(cm.total(), ds.windows.len() as u64);
        for c in 0..4 {
            assert_eq!(cm.row_sum(c), 3);
        }
        assert!(loss.is_finite() && loss >= 0.0);
        assert!(evaluate(&mut net, &ds, &[]).is_err());
    }

    #[test]
    fn untrained_accuracy_is_chance_level() {
        // labels assigned round-robin over identically distributed noise, so
        // correctness per window is Bernoulli(1/4) regardless of the net
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut windows = Vec::new();
        for i in 0..400usize {
            let data: Vec<f64> = (0..20 * 18).map(|_| rng.gen_range(0.0..1.0)).collect();
            let w = GrfWindow {
                matrix: Tensor::new(vec![20, 18], data).unwrap(),
                label: ClassLabel::from_index(i % 4).unwrap(),
                subject_id: format!("S{i:03}"),
                window_index: 0,
                normalized: false,
            };
            windows.push(normalize_window(w).unwrap());
        }
        let ds = LabeledDataset {
            windows,
            source: "test".into(),
            digest: [0u8; 32],
        };
        let cfg = crate::layers::ModelConfig {
            input_shape: (20, 18, 1),
            scale_divisor: 128,
            ..Default::default()
        };
        let mut net = Network::init(cfg, 13).unwrap();
        let indices: Vec<usize> = (0..ds.windows.len()).collect();
        let (cm, _) = evaluate(&mut net, &ds, &indices).unwrap();
        let acc = cm.accuracy().unwrap();
        // 99% binomial bounds for n=400, p=0.25
        assert!(acc > 0.25 - 0.056 && acc < 0.25 + 0.056, "accuracy {acc}");
    }
}
