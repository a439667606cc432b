//! Confusion-matrix bookkeeping and the per-class precision/recall/F1
//! report, laid out with rows = actual class, columns = predicted class.

use crate::error::{Error, Result};
use crate::ingest::ClassLabel;

pub const NUM_CLASSES: usize = 4;

/// 4x4 count matrix, rows = actual, columns = predicted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

/// One-vs-rest reduction of one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Binary {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn record(&mut self, actual: ClassLabel, predicted: ClassLabel) {
        self.counts[actual.index()][predicted.index()] += 1;
    }

    pub fn counts(&self) -> &[[u64; NUM_CLASSES]; NUM_CLASSES] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..NUM_CLASSES).map(|r| self.counts[r][c]).sum()
    }

    /// One-vs-rest TP/FN/FP/TN for class `c`.
    pub fn binarize(&self, c: usize) -> Binary {
        let tp = self.counts[c][c];
        let fn_ = self.row_sum(c) - tp;
        let fp = self.col_sum(c) - tp;
        let tn = self.total() - tp - fn_ - fp;
        Binary { tp, fn_, fp, tn }
    }

    /// trace/total multiclass accuracy.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::Data("empty confusion matrix".into()));
        }
        Ok(self.trace() as f64 / total as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("actual\\predicted,Healthy,PD2,PD2.5,PD3\n");
        for (r, label) in ClassLabel::ALL.iter().enumerate() {
            s.push_str(label.name());
            for c in 0..NUM_CLASSES {
                s.push_str(&format!(",{}", self.counts[r][c]));
            }
            s.push('\n');
        }
        s
    }
}

/// recall = TP/(TP+FN); 0 with a degeneracy flag when the denominator is 0.
pub fn recall(tp: u64, fn_: u64) -> (f64, bool) {
    let denom = tp + fn_;
    if denom == 0 {
        (0.0, true)
    } else {
        (tp as f64 / denom as f64, false)
    }
}

/// precision = TP/(TP+FP); 0 with a degeneracy flag when the denominator is 0.
pub fn precision(tp: u64, fp: u64) -> (f64, bool) {
    let denom = tp + fp;
    if denom == 0 {
        (0.0, true)
    } else {
        (tp as f64 / denom as f64, false)
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub per_class: Vec<(ClassLabel, ClassMetrics)>,
    pub accuracy: f64,
}

/// Per-class precision/recall/F1 plus overall accuracy.
pub fn report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    let accuracy = cm.accuracy()?;
    let mut per_class = Vec::with_capacity(NUM_CLASSES);
    for (c, label) in ClassLabel::ALL.iter().enumerate() {
        let b = cm.binarize(c);
        let (p, p_deg) = precision(b.tp, b.fp);
        let (r, r_deg) = recall(b.tp, b.fn_);
        per_class.push((
            *label,
            ClassMetrics {
                precision: p,
                recall: r,
                f1: f_measure(p, r),
                degenerate: p_deg || r_deg,
            },
        ));
    }
    Ok(ClassReport { per_class, accuracy })
}

impl ClassReport {
    /// Aligned plain-text table: Case, Precision, Recall, F1-measure,
    /// Overall accuracy.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<16} {:>10} {:>10} {:>12} {:>18}\n",
            "Case", "Precision", "Recall", "F1-measure", "Overall accuracy"
        ));
        for (label, m) in &self.per_class {
            let flag = if m.degenerate { " *" } else { "" };
            s.push_str(&format!(
                "{:<16} {:>10.4} {:>10.4} {:>12.4} {:>18.4}{}\n",
                label.name(),
                m.precision,
                m.recall,
                m.f1,
                self.accuracy,
                flag
            ));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("case,precision,recall,f1_measure,overall_accuracy\n");
        for (label, m) in &self.per_class {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                label.name(),
                m.precision,
                m.recall,
                m.f1,
                self.accuracy
            ));
        }
        s
    }
}
