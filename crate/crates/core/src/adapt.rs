//! Per-sample test-time adaptation: build an augmentation batch filtered by
//! the semantic margin, minimise the entropy of its marginal prediction, then
//! predict the original input with the updated weights.
//!
//! Episodic mode (MEMO) restarts every sample from the source weights and a
//! fresh optimizer. Continual mode (MEMO-CL) threads both through the stream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::AugmenterSet;
use crate::data::StreamRecord;
use crate::error::{invalid, Error, Result};
use crate::model::{
    apply_update, entropy, entropy_loss, entropy_loss_and_grad, marginal, predict, split_words,
    ModelParams, OptimizerKind, OptimizerState, ProbDist, Vocabulary,
};
use crate::par;
use crate::rng::Rng;

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_NUM_AUG: usize = 20;
pub const DEFAULT_ETA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdaptMode {
    /// Reset weights and optimizer after every sample.
    Episodic,
    /// Carry weights and optimizer state across the stream.
    Continual,
}

impl fmt::Display for AdaptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdaptMode::Episodic => "episodic",
            AdaptMode::Continual => "continual",
        })
    }
}

impl FromStr for AdaptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "episodic" | "memo" => Ok(Self::Episodic),
            "continual" | "memo-cl" => Ok(Self::Continual),
            other => Err(invalid(format!("unknown adaptation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    /// Semantic margin δ.
    pub delta: f64,
    /// Augmented copies per sample, N.
    pub num_aug: usize,
    /// Learning rate η.
    pub eta: f64,
    pub optimizer: OptimizerKind,
    pub mode: AdaptMode,
    pub smf_enabled: bool,
    /// Upper bound on generated copies before falling back.
    pub max_attempts: usize,
    pub steps_per_sample: usize,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            num_aug: DEFAULT_NUM_AUG,
            eta: DEFAULT_ETA,
            optimizer: OptimizerKind::Sgd,
            mode: AdaptMode::Continual,
            smf_enabled: true,
            max_attempts: 10 * DEFAULT_NUM_AUG,
            steps_per_sample: 1,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if self.num_aug == 0 {
            return Err(invalid("number of augmentations must be >= 1"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("learning rate must be finite and >= 0, got {}", self.eta)));
        }
        if self.max_attempts < self.num_aug {
            return Err(invalid(format!(
                "max_attempts ({}) must be >= number of augmentations ({})",
                self.max_attempts, self.num_aug
            )));
        }
        if self.steps_per_sample == 0 {
            return Err(invalid("steps_per_sample must be >= 1"));
        }
        Ok(())
    }
}

/// Semantic margin test: keep an augmented copy iff its probability for the
/// reference class is strictly within `delta` of the unaugmented input's.
pub fn smf_keep(p_aug: f64, p_ref: f64, delta: f64) -> bool {
    (p_aug - p_ref).abs() < delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptOutcome {
    /// argmax of the adapted model on the unaugmented input.
    pub predicted_label: usize,
    /// argmax before this sample's update.
    pub base_label: usize,
    /// Mean prediction over the adaptation batch, before the update.
    pub marginal_dist: ProbDist,
    pub loss_before: f64,
    pub loss_after: f64,
    /// Copies that passed the margin filter.
    pub accepted_count: usize,
    pub rejected_count: usize,
    pub attempts: usize,
    /// The attempt cap was hit and the batch was refilled with the most
    /// recently generated copies.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct StreamRun {
    pub outcomes: Vec<AdaptOutcome>,
    pub final_params: ModelParams,
}

/// Shared read-only context for adapting one stream.
#[derive(Debug, Clone, Copy)]
pub struct Adapter<'a> {
    pub vocab: &'a Vocabulary,
    pub augmenters: &'a AugmenterSet,
    pub config: &'a AdaptConfig,
}

struct Batch {
    tokens: Vec<Vec<usize>>,
    accepted: usize,
    attempts: usize,
    fallback: bool,
}

impl<'a> Adapter<'a> {
    pub fn new(
        vocab: &'a Vocabulary,
        augmenters: &'a AugmenterSet,
        config: &'a AdaptConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            vocab,
            augmenters,
            config,
        })
    }

    /// Draws copies until N pass the filter or the attempt cap is reached.
    ///
    /// Copies are generated in blocks from the sequential rng and scored
    /// together; acceptance is still decided in generation order and stops at
    /// the N-th accepted copy, so the result equals a one-at-a-time loop.
    fn collect_batch(
        &self,
        params: &ModelParams,
        words: &[String],
        reference_class: usize,
        p_ref: f64,
        rng: &mut Rng,
    ) -> Result<Batch> {
        let cfg = self.config;
        let n = cfg.num_aug;
        let mut accepted: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut recent: Vec<Vec<usize>> = Vec::with_capacity(cfg.max_attempts.min(4 * n));
        let mut attempts = 0;
        while accepted.len() < n && attempts < cfg.max_attempts {
            let block = (n - accepted.len()).min(cfg.max_attempts - attempts);
            let copies: Vec<Vec<usize>> = (0..block)
                .map(|_| self.vocab.lookup_all(&self.augmenters.augment(words, rng)))
                .collect();
            let probs: Vec<Result<ProbDist>> = par::map(&copies, |t| predict(params, t));
            for (tokens, p) in copies.into_iter().zip(probs) {
                if accepted.len() == n {
                    break;
                }
                attempts += 1;
                let keep = !cfg.smf_enabled || smf_keep(p?.get(reference_class), p_ref, cfg.delta);
                if keep {
                    accepted.push(tokens.clone());
                }
                recent.push(tokens);
            }
        }
        if accepted.len() == n {
            return Ok(Batch {
                tokens: accepted,
                accepted: n,
                attempts,
                fallback: false,
            });
        }
        let kept = accepted.len();
        let start = recent.len() - n;
        Ok(Batch {
            tokens: recent.split_off(start),
            accepted: kept,
            attempts,
            fallback: true,
        })
    }

    /// Adapts on one input and returns the outcome with the updated weights.
    pub fn adapt_single(
        &self,
        params: &ModelParams,
        opt: &mut OptimizerState,
        words: &[String],
        rng: &mut Rng,
    ) -> Result<(AdaptOutcome, ModelParams)> {
        let cfg = self.config;
        let x = self.vocab.lookup_all(words);
        let p_x = predict(params, &x)?;
        let base_label = p_x.argmax();
        let batch = self.collect_batch(params, words, base_label, p_x.get(base_label), rng)?;

        let dists: Vec<ProbDist> = par::map(&batch.tokens, |t| predict(params, t))
            .into_iter()
            .collect::<Result<_>>()?;
        let marginal_dist = marginal(&dists)?;
        let loss_before = entropy(&marginal_dist);

        let mut theta = params.clone();
        for _ in 0..cfg.steps_per_sample {
            let (_, grad) = entropy_loss_and_grad(&theta, &batch.tokens)?;
            theta = apply_update(&theta, &grad, opt, cfg.eta)?;
        }
        let loss_after = entropy_loss(&theta, &batch.tokens)?;
        let predicted_label = predict(&theta, &x)?.argmax();

        let outcome = AdaptOutcome {
            predicted_label,
            base_label,
            marginal_dist,
            loss_before,
            loss_after,
            accepted_count: batch.accepted,
            rejected_count: batch.attempts - batch.accepted,
            attempts: batch.attempts,
            fallback: batch.fallback,
        };
        Ok((outcome, theta))
    }

    /// Adapts over a stream. Each sample's rng is seeded from its record.
    pub fn run_stream(&self, params: &ModelParams, records: &[StreamRecord]) -> Result<StreamRun> {
        if records.is_empty() {
            return Err(invalid("cannot adapt on an empty stream"));
        }
        let kind = self.config.optimizer;
        match self.config.mode {
            AdaptMode::Episodic => {
                let outcomes = par::map(records, |r| {
                    let mut opt = OptimizerState::new(kind);
                    let mut rng = Rng::new(r.seed);
                    self.adapt_single(params, &mut opt, &split_words(&r.text), &mut rng)
                        .map(|(o, _)| o)
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
                Ok(StreamRun {
                    outcomes,
                    final_params: params.clone(),
                })
            }
            AdaptMode::Continual => {
                let mut opt = OptimizerState::new(kind);
                let mut theta = params.clone();
                let mut outcomes = Vec::with_capacity(records.len());
                for r in records {
                    let mut rng = Rng::new(r.seed);
                    let (o, next) =
                        self.adapt_single(&theta, &mut opt, &split_words(&r.text), &mut rng)?;
                    theta = next;
                    outcomes.push(o);
                }
                Ok(StreamRun {
                    outcomes,
                    final_params: theta,
                })
            }
        }
    }
}
