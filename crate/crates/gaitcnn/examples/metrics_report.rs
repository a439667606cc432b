//! Build a confusion matrix by hand and print the per-class
//! precision/recall/F1 report.

use gaitcnn::ingest::ClassLabel;
use gaitcnn::metrics::{report, ConfusionMatrix};

fn main() {
    // rows = actual, columns = predicted
    let cm = ConfusionMatrix::from_counts([
        [390, 6, 3, 1],
        [8, 404, 4, 1],
        [5, 12, 308, 2],
        [1, 2, 3, 102],
    ]);
    println!("confusion matrix (rows actual, columns predicted):");
    print!("{}", cm.to_csv());
    println!();

    let rep = report(&cm).unwrap();
    print!("{}", rep.to_text());

    // the same numbers one class at a time
    println!();
    for (c, label) in ClassLabel::ALL.iter().enumerate() {
        let b = cm.binarize(c);
        println!(
            "{:<8} tp={:<4} fp={:<4} fn={:<4} tn={}",
            label.name(),
            b.tp,
            b.fp,
            b.fn_,
            b.tn
        );
    }
}
