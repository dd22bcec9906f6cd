//! Prediction aggregation over augmented copies, with no weight updates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::AugmenterSet;
use crate::error::{invalid, Error, Result};
use crate::model::{forward, softmax, Logits, ModelParams, ProbDist, Vocabulary};
use crate::par;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    HardVote,
    SoftVote,
    LogitAverage,
    /// One weight per augmentation position.
    ClassWeighted(Vec<f64>),
}

impl AggregationMethod {
    pub fn name(&self) -> &'static str {
        match self {
            AggregationMethod::HardVote => "hard_vote",
            AggregationMethod::SoftVote => "soft_vote",
            AggregationMethod::LogitAverage => "logit_average",
            AggregationMethod::ClassWeighted(_) => "class_weighted",
        }
    }
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationMethod {
    type Err = Error;

    /// Parses the weight-free methods.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard_vote" => Ok(Self::HardVote),
            "soft_vote" => Ok(Self::SoftVote),
            "logit_average" => Ok(Self::LogitAverage),
            other => Err(invalid(format!("unknown aggregation method {other:?}"))),
        }
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn mean_vector<'a, I>(rows: I, width: usize, count: usize) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = vec![0.0; width];
    for row in rows {
        if row.len() != width {
            return Err(invalid("vectors differ in length"));
        }
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(acc)
}

/// Most frequent label; ties go to the smallest class index.
pub fn hard_vote(labels: &[usize]) -> Result<usize> {
    let max = *labels.iter().max().ok_or_else(|| invalid("hard vote over no labels"))?;
    let mut counts = vec![0usize; max + 1];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    Ok(best)
}

/// argmax of the mean probability vector.
pub fn soft_vote(dists: &[ProbDist]) -> Result<usize> {
    let first = dists.first().ok_or_else(|| invalid("soft vote over no distributions"))?;
    let mean = mean_vector(dists.iter().map(ProbDist::as_slice), first.len(), dists.len())?;
    Ok(argmax_first(&mean))
}

/// argmax of the mean raw logit vector.
pub fn logit_average(logits: &[Logits]) -> Result<usize> {
    let first = logits.first().ok_or_else(|| invalid("logit average over no logits"))?;
    let mean = mean_vector(logits.iter().map(Logits::as_slice), first.len(), logits.len())?;
    Ok(argmax_first(&mean))
}

fn weighted_logits(logits: &[Logits], weights: &[f64]) -> Result<Vec<f64>> {
    if logits.len() != weights.len() {
        return Err(invalid(format!(
            "{} logit vectors but {} position weights",
            logits.len(),
            weights.len()
        )));
    }
    let width = logits.first().ok_or_else(|| invalid("no logits"))?.len();
    let mut z = vec![0.0; width];
    for (l, &w) in logits.iter().zip(weights) {
        if l.len() != width {
            return Err(invalid("logit vectors differ in length"));
        }
        for (zi, li) in z.iter_mut().zip(l.as_slice()) {
            *zi += w * li;
        }
    }
    Ok(z)
}

/// argmax of `Σ_n w_n · logits_n`.
pub fn class_weighted(logits: &[Logits], weights: &[f64]) -> Result<usize> {
    Ok(argmax_first(&weighted_logits(logits, weights)?))
}

/// Full-batch gradient descent on the mean cross-entropy of
/// `softmax(Σ_n w_n · logits_n)`, starting from `w = 1/N`.
///
/// Plain gradient descent has no stochastic component, so the result is a
/// pure function of its inputs.
pub fn fit_class_weights(
    pool: &[Vec<Logits>],
    labels: &[usize],
    eta: f64,
    epochs: usize,
) -> Result<Vec<f64>> {
    let first = pool.first().ok_or_else(|| invalid("empty calibration pool"))?;
    if pool.len() != labels.len() {
        return Err(invalid("one label per calibration sample is required"));
    }
    let n = first.len();
    if n == 0 {
        return Err(invalid("calibration samples need at least one augmentation"));
    }
    let classes = first[0].len();
    for (sample, &y) in pool.iter().zip(labels) {
        if sample.len() != n {
            return Err(invalid(format!(
                "inconsistent augmentation count: expected {n}, found {}",
                sample.len()
            )));
        }
        if sample.iter().any(|l| l.len() != classes) || y >= classes {
            return Err(invalid("calibration logits or labels have inconsistent class counts"));
        }
    }
    let mut w = vec![1.0 / n as f64; n];
    let scale = 1.0 / pool.len() as f64;
    for _ in 0..epochs {
        let mut grad = vec![0.0; n];
        for (sample, &y) in pool.iter().zip(labels) {
            let p = softmax(&Logits(weighted_logits(sample, &w)?));
            for (g, l) in grad.iter_mut().zip(sample) {
                let dot: f64 = l
                    .as_slice()
                    .iter()
                    .zip(p.as_slice())
                    .enumerate()
                    .map(|(c, (lc, pc))| lc * (pc - if c == y { 1.0 } else { 0.0 }))
                    .sum();
                *g += scale * dot;
            }
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= eta * gi;
        }
    }
    if w.iter().any(|v| !v.is_finite()) || w.iter().all(|&v| v == 0.0) {
        return Err(invalid("class-weight fit diverged"));
    }
    Ok(w)
}

/// Logits of `n` augmented copies of `words`, generated in order from `rng`.
pub fn augmented_logits(
    params: &ModelParams,
    vocab: &Vocabulary,
    words: &[String],
    set: &AugmenterSet,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<Logits>> {
    let copies: Vec<Vec<usize>> = (0..n)
        .map(|_| vocab.lookup_all(&set.augment(words, rng)))
        .collect();
    par::map(&copies, |t| forward(params, t)).into_iter().collect()
}

/// Aggregates `logits` of augmented copies according to `method`.
pub fn aggregate(method: &AggregationMethod, logits: &[Logits]) -> Result<usize> {
    match method {
        AggregationMethod::HardVote => {
            let labels: Vec<usize> = logits.iter().map(Logits::argmax).collect();
            hard_vote(&labels)
        }
        AggregationMethod::SoftVote => {
            let dists: Vec<ProbDist> = logits.iter().map(softmax).collect();
            soft_vote(&dists)
        }
        AggregationMethod::LogitAverage => logit_average(logits),
        AggregationMethod::ClassWeighted(w) => class_weighted(logits, w),
    }
}

/// Test-time augmentation prediction: `n` copies, no filtering, no update.
pub fn predict_tta(
    params: &ModelParams,
    vocab: &Vocabulary,
    words: &[String],
    method: &AggregationMethod,
    set: &AugmenterSet,
    n: usize,
    rng: &mut Rng,
) -> Result<usize> {
    if n == 0 {
        return Err(invalid("test-time augmentation needs N >= 1"));
    }
    let logits = augmented_logits(params, vocab, words, set, n, rng)?;
    aggregate(method, &logits)
}
