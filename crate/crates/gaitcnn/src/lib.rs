//! Parkinsonian-gait severity staging from vertical ground-reaction-force
//! walking records.
//!
//! The pipeline parses 19-column GRF text records, cuts them into
//! normalized 500x18 windows, trains a from-scratch 4-stage CNN
//! (conv 3x3 "same" -> ReLU -> max-pool 2x2/2, four times, then
//! dense -> ReLU -> dense -> softmax) with Adam and early stopping, and
//! reports per-class precision/recall/F1 plus the confusion matrix for
//! {healthy, PD stage 2, PD stage 2.5, PD stage 3}.
//!
//! See the crate examples for one runnable program per major capability,
//! and the `gaitcnn` binary for the subcommand interface.

pub mod commands;
pub mod config;
pub mod error;
pub mod gradcheck;
pub mod ingest;
pub mod layers;
pub mod metrics;
pub mod optim;
pub mod spectrogram;
pub mod synthetic;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use ingest::{ClassLabel, GrfRecord, GrfWindow, LabeledDataset};
pub use layers::{ModelConfig, Network};
pub use metrics::ConfusionMatrix;
pub use tensor::Tensor;
pub use trainer::{SplitSpec, SplitStrategy, TrainHistory};
