//! Mean-pooled embedding classifier with a linear softmax head.
//!
//! Everything here is plain `f64` row-major storage with hand-derived
//! gradients: cross-entropy for source training and entropy of the marginal
//! prediction over an augmentation batch for test-time adaptation.

mod checkpoint;
mod grad;
mod ops;
mod optim;
mod params;
mod train;
mod vocab;

pub use checkpoint::{load_checkpoint, parse_checkpoint, render_checkpoint, save_checkpoint, Checkpoint};
pub use grad::{cross_entropy_loss_and_grad, entropy_loss, entropy_loss_and_grad};
pub use ops::{entropy, forward, marginal, predict, softmax, Logits, ProbDist};
pub use optim::{apply_update, OptimizerKind, OptimizerState};
pub use params::{Dims, Gradient, ModelParams};
pub use train::{accuracy, mean_cross_entropy, train_source, TrainConfig};
pub use vocab::{split_words, tokenize, Vocabulary, UNKNOWN_TOKEN};
