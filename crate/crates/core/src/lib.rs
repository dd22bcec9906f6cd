//! Test-time adaptation of a text classifier by marginal entropy
//! minimization over filtered augmentations (MEMO-CL), with the
//! prediction-aggregation baselines, synthetic distribution shift and the
//! average / worst-group accuracy and correction-to-corruption metrics used
//! to compare them.
//!
//! The `parallel` feature (on by default) runs batch scoring, episodic
//! streams and seed sweeps on rayon; without it the same code runs
//! sequentially with identical results.

pub mod adapt;
pub mod augment;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod outcome;
pub mod par;
pub mod report;
pub mod rng;
pub mod suite;
pub mod tta;

pub use error::{Error, Result};
pub use rng::Rng;
