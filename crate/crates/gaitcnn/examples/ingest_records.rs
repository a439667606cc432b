//! Parse a 19-column walking record from memory, cut it into windows, and
//! normalize them — the same path `gaitcnn ingest` runs per file.

use gaitcnn::ingest::{
    label_from, normalize_window, parse_record, resample_to_100hz, window_record, Cohort,
};

fn main() {
    // 1200 frames at 100 Hz: timestamp then 18 force columns
    let mut text = String::new();
    for r in 0..1200 {
        text.push_str(&format!("{:.2}", r as f64 * 0.01));
        for c in 0..18 {
            let v = 300.0 + 150.0 * ((r as f64 / 11.0 + c as f64 * 0.4).sin() + 1.0);
            text.push_str(&format!("\t{v:.4}"));
        }
        text.push('\n');
    }

    let record = parse_record(text.as_bytes(), "GaPt03_01.txt").unwrap();
    println!(
        "parsed {}: {} frames at {:.1} Hz (trial {})",
        record.subject_id,
        record.frames.shape()[0],
        record.sample_rate,
        record.trial
    );
    let record = resample_to_100hz(record);

    // the demographics table would supply cohort and stage; fake one entry
    let label = label_from(Cohort::Patient, Some(2.0)).unwrap();
    let windows = window_record(&record, label, 500, 0).unwrap();
    println!("cut {} windows of 500x18 (trailing remainder dropped)", windows.len());

    for w in windows {
        let w = normalize_window(w).unwrap();
        let lo = w.matrix.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = w.matrix.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "window {}: label {}, range [{lo:.1}, {hi:.1}]",
            w.window_index,
            w.label.name()
        );
    }
}
