//! Generator for a separable 4-class dataset of 500x18 windows, used by the
//! training sanity checks and the examples. Each class carries a distinct
//! structured pattern (oscillation frequency and column emphasis) under
//! uniform noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ingest::{normalize_window, ClassLabel, GrfWindow, LabeledDataset};
use crate::tensor::Tensor;

/// Per-class template: value at (row, col) before noise.
fn template(label: ClassLabel, row: usize, col: usize) -> f64 {
    let t = row as f64 / 100.0;
    let phase = 2.0 * std::f64::consts::PI * t;
    match label {
        // slow symmetric oscillation, flat column profile
        ClassLabel::Healthy => 1.0 + 0.8 * (phase).sin(),
        // doubled frequency, emphasis on the left-foot columns
        ClassLabel::Pd2 => {
            let emphasis = if col < 8 { 1.6 } else { 0.7 };
            emphasis * (1.0 + 0.8 * (2.0 * phase).sin())
        }
        // quadrupled frequency, emphasis on the right-foot columns
        ClassLabel::Pd2_5 => {
            let emphasis = if (8..16).contains(&col) { 1.6 } else { 0.7 };
            emphasis * (1.0 + 0.8 * (4.0 * phase).sin())
        }
        // elevated totals with a sawtooth-like profile
        ClassLabel::Pd3 => {
            let emphasis = if col >= 16 { 2.2 } else { 0.8 };
            emphasis * (1.0 + 0.8 * (t * 8.0).fract())
        }
    }
}

/// Generate `per_class` windows per class with the given spatial size.
pub fn generate(per_class: usize, rows: usize, cols: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut windows = Vec::with_capacity(per_class * 4);
    for label in ClassLabel::ALL {
        for i in 0..per_class {
            let mut data = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    let noise: f64 = rng.gen_range(0.0..0.5);
                    data.push(template(label, r, c) + noise);
                }
            }
            let w = GrfWindow {
                matrix: Tensor::new(vec![rows, cols], data)?,
                label,
                subject_id: format!("Syn{}{:03}", label.index(), i),
                window_index: 0,
                normalized: false,
            };
            windows.push(normalize_window(w)?);
        }
    }
    Ok(LabeledDataset {
        windows,
        source: format!("synthetic(per_class={per_class}, seed={seed})"),
        digest: [0u8; 32],
    })
}

/// Standard 500x18 synthetic dataset.
pub fn generate_default(per_class: usize, seed: u64) -> Result<LabeledDataset> {
    generate(per_class, 500, 18, seed)
}
