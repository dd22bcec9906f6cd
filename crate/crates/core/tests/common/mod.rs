#![allow(dead_code)]

use memocl::model::{Dims, ModelParams};
use memocl::Rng;

/// Random weights and a batch of `n` token sequences (length 1..=5), all
/// drawn from one rng so a seed pins the whole case.
pub fn random_case(seed: u64, vocab: usize, dim: usize, classes: usize, n: usize) -> (ModelParams, Vec<Vec<usize>>) {
    let mut rng = Rng::new(seed);
    let dims = Dims::new(vocab, dim, classes).unwrap();
    let params = ModelParams::random(dims, 0.8, &mut rng);
    let batch = (0..n)
        .map(|_| {
            let len = 1 + rng.below(5);
            (0..len).map(|_| rng.below(vocab)).collect()
        })
        .collect();
    (params, batch)
}

/// The small case the gradient and descent checks are pinned on.
pub fn seed42_case() -> (ModelParams, Vec<Vec<usize>>) {
    random_case(42, 7, 3, 2, 4)
}

pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

use memocl::augment::AugmenterSet;
use memocl::data::synth::SynthConfig;
use memocl::model::Checkpoint;
use memocl::suite::{synth_config, Fixture, Settings};

/// A scaled-down benchmark fixture with its augmenters and a trained checkpoint.
pub struct Small {
    pub fixture: Fixture,
    pub augmenters: AugmenterSet,
    pub checkpoint: Checkpoint,
}

pub fn small() -> Small {
    let cfg = SynthConfig {
        train_size: 300,
        test_size: 120,
        calibration_size: 60,
        ..synth_config()
    };
    let fixture = Fixture::generate(&cfg, Settings::default()).unwrap();
    let augmenters = fixture.augmenters().unwrap();
    let checkpoint = fixture.train_checkpoint(&augmenters).unwrap();
    Small {
        fixture,
        augmenters,
        checkpoint,
    }
}
