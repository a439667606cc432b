//! Train the reduced-width network on the synthetic 4-class dataset and
//! print the holdout report. Runs in well under a minute.

use gaitcnn::layers::{ModelConfig, Network};
use gaitcnn::metrics::report;
use gaitcnn::synthetic;
use gaitcnn::trainer::{evaluate, split_dataset, train, SplitSpec, TrainConfig};

fn main() {
    let ds = synthetic::generate_default(100, 1).unwrap();
    println!("{}", ds.summary_text());

    let split = split_dataset(&ds, &SplitSpec::default()).unwrap();
    println!(
        "split: {} train / {} holdout windows\n",
        split.train.len(),
        split.holdout.len()
    );

    let mut net = Network::init(ModelConfig::with_scale_divisor(8), 1).unwrap();
    let cfg = TrainConfig::default();
    let history = train(&mut net, &ds, &split, &cfg, |e| {
        println!(
            "epoch {:>2}: train loss {:.4} acc {:.4} | val loss {:.4} acc {:.4} ({:.1}s)",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy, e.wall_seconds
        );
    })
    .unwrap();
    println!("stopped: {}\n", history.stop_reason.name());

    let (cm, mean_loss) = evaluate(&mut net, &ds, &split.holdout).unwrap();
    print!("{}", report(&cm).unwrap().to_text());
    println!("holdout mean loss: {mean_loss:.4}");
}
