//! End-to-end evaluation runs: frozen baseline, test-time augmentation
//! baselines and the two adaptation modes, each producing an outcome log.
//!
//! Independent (method, seed) jobs fan out over the rayon pool when the
//! `parallel` feature is on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adapt::{AdaptConfig, AdaptMode, Adapter, StreamRun};
use crate::augment::AugmenterSet;
use crate::data::{stream, Dataset, StreamRecord};
use crate::error::{invalid, Error, Result};
use crate::model::{
    predict, split_words, train_source, Checkpoint, Dims, ModelParams, TrainConfig, Vocabulary,
};
use crate::outcome::{group_bits, OutcomeRecord};
use crate::par;
use crate::rng::Rng;
use crate::tta::{aggregate, augmented_logits, fit_class_weights, AggregationMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Baseline,
    TtaHard,
    TtaSoft,
    TtaAverage,
    TtaWeighted,
    Memo,
    MemoSmf,
    MemoCl,
    MemoClSmf,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Baseline,
        Method::TtaHard,
        Method::TtaSoft,
        Method::TtaAverage,
        Method::TtaWeighted,
        Method::Memo,
        Method::MemoSmf,
        Method::MemoCl,
        Method::MemoClSmf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::TtaHard => "tta-hard",
            Method::TtaSoft => "tta-soft",
            Method::TtaAverage => "tta-average",
            Method::TtaWeighted => "tta-weighted",
            Method::Memo => "memo",
            Method::MemoSmf => "memo+smf",
            Method::MemoCl => "memo-cl",
            Method::MemoClSmf => "memo-cl+smf",
        }
    }

    /// Row label used in the comparison table.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Baseline => "Baseline",
            Method::TtaHard => "TTA majority hard-voting",
            Method::TtaSoft => "TTA majority soft-voting",
            Method::TtaAverage => "TTA average",
            Method::TtaWeighted => "TTA class weighted",
            Method::Memo => "MEMO",
            Method::MemoSmf => "MEMO + SMF",
            Method::MemoCl => "MEMO-CL",
            Method::MemoClSmf => "MEMO-CL + SMF",
        }
    }

    pub fn adaptation(mode: AdaptMode, smf: bool) -> Self {
        match (mode, smf) {
            (AdaptMode::Episodic, false) => Method::Memo,
            (AdaptMode::Episodic, true) => Method::MemoSmf,
            (AdaptMode::Continual, false) => Method::MemoCl,
            (AdaptMode::Continual, true) => Method::MemoClSmf,
        }
    }

    /// Mode and margin-filter setting for adaptation methods.
    pub fn adapt_settings(self) -> Option<(AdaptMode, bool)> {
        match self {
            Method::Memo => Some((AdaptMode::Episodic, false)),
            Method::MemoSmf => Some((AdaptMode::Episodic, true)),
            Method::MemoCl => Some((AdaptMode::Continual, false)),
            Method::MemoClSmf => Some((AdaptMode::Continual, true)),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                invalid(format!("unknown method {s:?}; valid methods: {}", valid.join(", ")))
            })
    }
}

/// Source-model shape and training schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub dim: usize,
    pub init_scale: f64,
    pub init_seed: u64,
    pub train: TrainConfig,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            init_scale: 0.1,
            init_seed: 7,
            train: TrainConfig::default(),
        }
    }
}

/// Vocabulary over the training text plus every word the augmenters can
/// emit, so augmented copies never fall back to the unknown token for
/// resource words.
pub fn build_vocabulary(train: &Dataset, set: &AugmenterSet) -> Vocabulary {
    let train_words: Vec<String> = train.records.iter().flat_map(|r| split_words(&r.text)).collect();
    Vocabulary::from_words(
        train_words
            .iter()
            .map(String::as_str)
            .chain(set.output_words()),
    )
}

/// Trains the source classifier from a seeded random initialisation.
pub fn train_checkpoint(train: &Dataset, set: &AugmenterSet, cfg: &SourceConfig) -> Result<Checkpoint> {
    let vocab = build_vocabulary(train, set);
    let dims = Dims::new(vocab.len(), cfg.dim, train.num_classes)?;
    let mut init = ModelParams::random(dims, cfg.init_scale, &mut Rng::new(cfg.init_seed));
    let data: Vec<(Vec<usize>, usize)> = train
        .records
        .iter()
        .map(|r| (vocab.lookup_all(&split_words(&r.text)), r.label))
        .collect();
    // Words that never occur in training would otherwise keep a random row
    // and give unseen spellings an arbitrary lean; start them neutral.
    let mut seen = vec![false; vocab.len()];
    for (tokens, _) in &data {
        for &t in tokens {
            seen[t] = true;
        }
    }
    for (row, _) in seen.iter().enumerate().filter(|(_, s)| !**s) {
        init.embeddings[row * cfg.dim..(row + 1) * cfg.dim].fill(0.0);
    }
    let params = train_source(&init, &data, &cfg.train)?;
    Ok(Checkpoint { vocab, params })
}

fn base_record(method: &str, seed: u64, r: &StreamRecord, base: usize, pred: usize) -> OutcomeRecord {
    OutcomeRecord {
        method: method.to_string(),
        seed,
        sample_id: r.id,
        base_label: base,
        predicted_label: pred,
        true_label: r.label,
        group_bits: group_bits(&r.groups),
        loss_before: None,
        loss_after: None,
        accepted: None,
        rejected: None,
        fallback: None,
    }
}

/// Frozen source model predictions.
pub fn baseline_log(ckpt: &Checkpoint, records: &[StreamRecord], seed: u64) -> Result<Vec<OutcomeRecord>> {
    par::map(records, |r| {
        let x = ckpt.vocab.lookup_all(&split_words(&r.text));
        let pred = predict(&ckpt.params, &x)?.argmax();
        Ok(base_record(Method::Baseline.name(), seed, r, pred, pred))
    })
    .into_iter()
    .collect()
}

/// Test-time augmentation with the given aggregation; each sample's copies
/// come from its own record-seeded rng.
pub fn tta_log(
    ckpt: &Checkpoint,
    records: &[StreamRecord],
    method: &AggregationMethod,
    name: &str,
    set: &AugmenterSet,
    num_aug: usize,
    seed: u64,
) -> Result<Vec<OutcomeRecord>> {
    if num_aug == 0 {
        return Err(invalid("test-time augmentation needs N >= 1"));
    }
    par::map(records, |r| {
        let words = split_words(&r.text);
        let x = ckpt.vocab.lookup_all(&words);
        let base = predict(&ckpt.params, &x)?.argmax();
        let mut rng = Rng::new(r.seed);
        let logits = augmented_logits(&ckpt.params, &ckpt.vocab, &words, set, num_aug, &mut rng)?;
        let pred = aggregate(method, &logits)?;
        Ok(base_record(name, seed, r, base, pred))
    })
    .into_iter()
    .collect()
}

/// Fits per-position aggregation weights on a labeled calibration split.
pub fn calibrate_class_weights(
    ckpt: &Checkpoint,
    calibration: &Dataset,
    set: &AugmenterSet,
    num_aug: usize,
    eta: f64,
    epochs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let records = stream(calibration, seed);
    let pool = par::map(&records, |r| {
        let words = split_words(&r.text);
        let mut rng = Rng::new(r.seed);
        augmented_logits(&ckpt.params, &ckpt.vocab, &words, set, num_aug, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = records.iter().map(|r| r.label.expect("labeled split")).collect();
    fit_class_weights(&pool, &labels, eta, epochs)
}

/// Runs adaptation over the stream and logs one record per sample.
pub fn adapt_log(
    ckpt: &Checkpoint,
    records: &[StreamRecord],
    cfg: &AdaptConfig,
    set: &AugmenterSet,
    seed: u64,
) -> Result<(Vec<OutcomeRecord>, StreamRun)> {
    let adapter = Adapter::new(&ckpt.vocab, set, cfg)?;
    let run = adapter.run_stream(&ckpt.params, records)?;
    let name = Method::adaptation(cfg.mode, cfg.smf_enabled).name();
    let log = records
        .iter()
        .zip(&run.outcomes)
        .map(|(r, o)| OutcomeRecord {
            loss_before: Some(o.loss_before),
            loss_after: Some(o.loss_after),
            accepted: Some(o.accepted_count),
            rejected: Some(o.rejected_count),
            fallback: Some(o.fallback),
            ..base_record(name, seed, r, o.base_label, o.predicted_label)
        })
        .collect();
    Ok((log, run))
}

/// Everything needed to evaluate every method on one shifted stream.
#[derive(Debug, Clone)]
pub struct Benchmark<'a> {
    pub checkpoint: &'a Checkpoint,
    /// Target-domain data the methods are evaluated on.
    pub target: &'a Dataset,
    /// Labeled source-domain split for the class-weighted baseline.
    pub calibration: Option<&'a Dataset>,
    pub augmenters: &'a AugmenterSet,
    /// Settings for the episodic rows; mode and margin filter are set per method.
    pub episodic: AdaptConfig,
    /// Settings for the continual rows, which usually want a smaller step.
    pub continual: AdaptConfig,
    pub tta_num_aug: usize,
    pub weight_eta: f64,
    pub weight_epochs: usize,
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub seed: u64,
    pub log: Vec<OutcomeRecord>,
}

impl Benchmark<'_> {
    pub fn run_one(&self, method: Method, seed: u64) -> Result<Vec<OutcomeRecord>> {
        let records = stream(self.target, seed);
        let name = method.name();
        let tta = |m: AggregationMethod| {
            tta_log(self.checkpoint, &records, &m, name, self.augmenters, self.tta_num_aug, seed)
        };
        match method {
            Method::Baseline => baseline_log(self.checkpoint, &records, seed),
            Method::TtaHard => tta(AggregationMethod::HardVote),
            Method::TtaSoft => tta(AggregationMethod::SoftVote),
            Method::TtaAverage => tta(AggregationMethod::LogitAverage),
            Method::TtaWeighted => {
                let calibration = self
                    .calibration
                    .ok_or_else(|| invalid("class-weighted aggregation needs a calibration split"))?;
                let w = calibrate_class_weights(
                    self.checkpoint,
                    calibration,
                    self.augmenters,
                    self.tta_num_aug,
                    self.weight_eta,
                    self.weight_epochs,
                    seed,
                )?;
                tta(AggregationMethod::ClassWeighted(w))
            }
            adaptive => {
                let (mode, smf) = adaptive.adapt_settings().expect("adaptation method");
                let base = match mode {
                    AdaptMode::Episodic => &self.episodic,
                    AdaptMode::Continual => &self.continual,
                };
                let cfg = AdaptConfig {
                    mode,
                    smf_enabled: smf,
                    ..base.clone()
                };
                Ok(adapt_log(self.checkpoint, &records, &cfg, self.augmenters, seed)?.0)
            }
        }
    }

    /// Runs every (method, seed) pair; results come back in input order.
    pub fn run(&self, methods: &[Method], seeds: &[u64]) -> Result<Vec<MethodRun>> {
        let jobs: Vec<(Method, u64)> = methods
            .iter()
            .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
            .collect();
        par::map(&jobs, |&(method, seed)| {
            Ok(MethodRun {
                method,
                seed,
                log: self.run_one(method, seed)?,
            })
        })
        .into_iter()
        .collect()
    }
}
