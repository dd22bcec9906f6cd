//! Labeled datasets, synthetic lexical shift and seeded stream iteration.

mod dataset;
mod shift;
mod stream;
pub mod synth;

pub use dataset::{load_dataset, parse_dataset, render_dataset, save_dataset, Dataset, Record};
pub use shift::{apply_shift, load_shift_spec, parse_shift_spec, render_shift_spec, ShiftSpec, NOISE_MARKER};
pub use stream::{stream, StreamRecord};

pub const DEFAULT_NUM_CLASSES: usize = 2;
pub const DEFAULT_NUM_GROUPS: usize = 8;
