//! Sequential loops against the `par` helpers on the two hot paths:
//! episodic adaptation over a stream and neighbour-index construction.
//! Without the `parallel` feature both arms run on one thread.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use memocl::adapt::{AdaptConfig, AdaptMode, Adapter};
use memocl::augment::NeighborIndex;
use memocl::data::stream;
use memocl::data::synth::SynthConfig;
use memocl::model::{split_words, OptimizerState};
use memocl::suite::{synth_config, Fixture, Settings};
use memocl::Rng;

fn episodic(c: &mut Criterion) {
    let cfg = SynthConfig {
        train_size: 400,
        test_size: 200,
        calibration_size: 10,
        ..synth_config()
    };
    let fx = Fixture::generate(&cfg, Settings::default()).unwrap();
    let set = fx.augmenters().unwrap();
    let ckpt = fx.train_checkpoint(&set).unwrap();
    let adapt = AdaptConfig {
        mode: AdaptMode::Episodic,
        ..fx.settings.episodic.clone()
    };
    let adapter = Adapter::new(&ckpt.vocab, &set, &adapt).unwrap();
    let records = stream(&fx.shifted, 0);

    let mut group = c.benchmark_group("episodic_stream");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| {
            for r in &records {
                let mut opt = OptimizerState::new(adapt.optimizer);
                let mut rng = Rng::new(r.seed);
                black_box(
                    adapter
                        .adapt_single(&ckpt.params, &mut opt, &split_words(&r.text), &mut rng)
                        .unwrap(),
                );
            }
        })
    });
    group.bench_function("par", |b| {
        b.iter(|| black_box(adapter.run_stream(&ckpt.params, &records).unwrap()))
    });
    group.finish();
}

fn neighbors(c: &mut Criterion) {
    let fx = Fixture::standard().unwrap();
    let table = fx.vectors.clone();
    let mut group = c.benchmark_group("neighbor_index");
    group.bench_function("sequential", |b| {
        b.iter(|| black_box((0..table.len()).map(|i| table.nearest(i, 3)).collect::<Vec<_>>()))
    });
    group.bench_function("par", |b| {
        b.iter(|| black_box(NeighborIndex::build(table.clone(), 3).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, episodic, neighbors);
criterion_main!(benches);
