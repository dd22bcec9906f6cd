mod common;

use std::collections::BTreeMap;

use memocl::adapt::{AdaptConfig, AdaptMode, Adapter};
use memocl::augment::{AugmenterSet, SynonymLexicon};
use memocl::data::{stream, StreamRecord};
use memocl::model::{split_words, OptimizerKind, OptimizerState, Vocabulary};
use memocl::Rng;

fn config(mode: AdaptMode, smf: bool) -> AdaptConfig {
    AdaptConfig {
        mode,
        smf_enabled: smf,
        eta: 0.5,
        num_aug: 8,
        max_attempts: 40,
        ..AdaptConfig::default()
    }
}

fn run(s: &common::Small, cfg: &AdaptConfig, records: &[StreamRecord]) -> memocl::adapt::StreamRun {
    Adapter::new(&s.checkpoint.vocab, &s.augmenters, cfg)
        .unwrap()
        .run_stream(&s.checkpoint.params, records)
        .unwrap()
}

#[test]
fn episodic_mode_resets_and_ignores_order() {
    let s = common::small();
    let cfg = config(AdaptMode::Episodic, true);
    let records = stream(&s.fixture.shifted, 3);
    let forward = run(&s, &cfg, &records);
    assert_eq!(forward.final_params, s.checkpoint.params);

    let mut reversed = records.clone();
    reversed.reverse();
    let backward = run(&s, &cfg, &reversed);
    let by_id = |recs: &[StreamRecord], run: &memocl::adapt::StreamRun| -> BTreeMap<usize, usize> {
        recs.iter().zip(&run.outcomes).map(|(r, o)| (r.id, o.predicted_label)).collect()
    };
    assert_eq!(by_id(&records, &forward), by_id(&reversed, &backward));
}

#[test]
fn modes_agree_on_a_single_sample() {
    let s = common::small();
    let records = &stream(&s.fixture.shifted, 1)[..1];
    let a = run(&s, &config(AdaptMode::Episodic, true), records);
    let b = run(&s, &config(AdaptMode::Continual, true), records);
    assert_eq!(a.outcomes, b.outcomes);
}

#[test]
fn continual_mode_moves_the_weights() {
    let s = common::small();
    let records = stream(&s.fixture.shifted, 0);
    let out = run(&s, &config(AdaptMode::Continual, false), &records[..20]);
    assert_ne!(out.final_params, s.checkpoint.params);
    assert!(out.final_params.is_finite());
}

#[test]
fn zero_margin_falls_back_on_every_sample() {
    let s = common::small();
    let cfg = AdaptConfig {
        delta: 0.0,
        ..config(AdaptMode::Continual, true)
    };
    let records = stream(&s.fixture.shifted, 5);
    let out = run(&s, &cfg, &records[..100]);
    assert_eq!(out.outcomes.len(), 100);
    for o in &out.outcomes {
        assert!(o.fallback);
        assert_eq!(o.accepted_count, 0);
        assert_eq!(o.attempts, cfg.max_attempts);
        assert!(o.predicted_label < 2);
        assert!(o.loss_after.is_finite());
    }
}

#[test]
fn unit_margin_accepts_the_first_copies() {
    let s = common::small();
    let cfg = AdaptConfig {
        delta: 1.0,
        ..config(AdaptMode::Episodic, true)
    };
    let records = stream(&s.fixture.shifted, 2);
    for o in run(&s, &cfg, &records[..30]).outcomes {
        assert!(!o.fallback);
        assert_eq!((o.accepted_count, o.attempts), (cfg.num_aug, cfg.num_aug));
    }
}

#[test]
fn zero_step_changes_nothing() {
    let s = common::small();
    let cfg = AdaptConfig {
        eta: 0.0,
        ..config(AdaptMode::Continual, true)
    };
    let records = stream(&s.fixture.shifted, 4);
    let out = run(&s, &cfg, &records[..40]);
    assert_eq!(out.final_params, s.checkpoint.params);
    for o in &out.outcomes {
        assert_eq!(o.predicted_label, o.base_label);
        assert_eq!(o.loss_before, o.loss_after);
    }
}

#[test]
fn one_small_step_lowers_the_loss_on_the_seed42_case() {
    let (params, _) = common::seed42_case();
    let tokens: Vec<String> = ["<unk>", "a", "b", "c", "d", "e", "f"].iter().map(|t| t.to_string()).collect();
    let vocab = Vocabulary::new(tokens, 0).unwrap();
    let lexicon = SynonymLexicon::parse("a\tb,c\nd\te,f\nc\ta\n").unwrap();
    let set = AugmenterSet::builder().lexicon(lexicon).replacement_rate(0.7).build().unwrap();
    let cfg = AdaptConfig {
        num_aug: 4,
        eta: 1e-3,
        optimizer: OptimizerKind::Sgd,
        steps_per_sample: 1,
        smf_enabled: false,
        mode: AdaptMode::Episodic,
        ..AdaptConfig::default()
    };
    let adapter = Adapter::new(&vocab, &set, &cfg).unwrap();
    let mut opt = OptimizerState::new(cfg.optimizer);
    let (o, next) = adapter
        .adapt_single(&params, &mut opt, &split_words("a d c"), &mut Rng::new(42))
        .unwrap();
    assert!(o.loss_after < o.loss_before, "{} >= {}", o.loss_after, o.loss_before);
    assert_ne!(next, params);
}

#[test]
fn invalid_configs_are_rejected() {
    let s = common::small();
    for cfg in [
        AdaptConfig { num_aug: 0, ..AdaptConfig::default() },
        AdaptConfig { delta: -0.1, ..AdaptConfig::default() },
        AdaptConfig { eta: f64::NAN, ..AdaptConfig::default() },
        AdaptConfig { max_attempts: 3, ..AdaptConfig::default() },
    ] {
        assert!(Adapter::new(&s.checkpoint.vocab, &s.augmenters, &cfg).is_err());
    }
    let cfg = AdaptConfig::default();
    let adapter = Adapter::new(&s.checkpoint.vocab, &s.augmenters, &cfg).unwrap();
    assert!(adapter.run_stream(&s.checkpoint.params, &[]).is_err());
}
