use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::error::{invalid, Result};

/// Pre-softmax classifier output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logits(pub Vec<f64>);

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist(Vec<f64>);

/// Smallest probability a softmax entry is allowed to take. Keeps entries
/// strictly positive when a logit gap underflows `exp`.
const PROB_FLOOR: f64 = f64::MIN_POSITIVE;

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Logits {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the largest logit; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        argmax_first(&self.0)
    }
}

impl ProbDist {
    /// Validates the simplex invariants: entries in (0, 1], sum 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("empty distribution"));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(invalid(format!("probabilities must lie in (0, 1]: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0 / classes as f64; classes])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    /// Most probable class; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        argmax_first(&self.0)
    }
}

/// Mean-pools the embedding rows of `tokens` (zero vector when empty).
pub(crate) fn pool(params: &ModelParams, tokens: &[usize]) -> Result<Vec<f64>> {
    let dims = params.dims();
    let mut pooled = vec![0.0; dims.dim];
    if tokens.is_empty() {
        return Ok(pooled);
    }
    for &t in tokens {
        if t >= dims.vocab {
            return Err(invalid(format!(
                "token index {t} out of range for vocabulary of {}",
                dims.vocab
            )));
        }
        for (acc, e) in pooled.iter_mut().zip(params.embedding_row(t)) {
            *acc += e;
        }
    }
    let scale = 1.0 / tokens.len() as f64;
    pooled.iter_mut().for_each(|v| *v *= scale);
    Ok(pooled)
}

pub(crate) fn head(params: &ModelParams, pooled: &[f64]) -> Logits {
    let classes = params.dims().classes;
    let mut out = params.head_bias().to_vec();
    for (k, &h) in pooled.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        let row = &params.head_weights()[k * classes..(k + 1) * classes];
        for (o, w) in out.iter_mut().zip(row) {
            *o += h * w;
        }
    }
    Logits(out)
}

/// Logits of the mean-pooled embedding through the linear head.
pub fn forward(params: &ModelParams, tokens: &[usize]) -> Result<Logits> {
    let pooled = pool(params, tokens)?;
    Ok(head(params, &pooled))
}

/// Max-shifted softmax. Entries are floored at the smallest normal `f64` so
/// they stay strictly positive for any finite logit gap.
pub fn softmax(logits: &Logits) -> ProbDist {
    let l = logits.as_slice();
    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut exps: Vec<f64> = l.iter().map(|&v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    for e in exps.iter_mut() {
        *e = (*e / z).max(PROB_FLOOR);
    }
    ProbDist(exps)
}

/// Shannon entropy in nats.
pub fn entropy(p: &ProbDist) -> f64 {
    -p.as_slice()
        .iter()
        .map(|&q| if q > 0.0 { q * q.ln() } else { 0.0 })
        .sum::<f64>()
}

/// Entrywise mean of equally sized distributions.
pub fn marginal(dists: &[ProbDist]) -> Result<ProbDist> {
    let first = dists
        .first()
        .ok_or_else(|| invalid("marginal of an empty list"))?;
    let classes = first.len();
    let mut acc = vec![0.0; classes];
    for d in dists {
        if d.len() != classes {
            return Err(invalid("distributions differ in length"));
        }
        for (a, p) in acc.iter_mut().zip(d.as_slice()) {
            *a += p;
        }
    }
    let n = dists.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    Ok(ProbDist(acc))
}

/// `softmax(forward(..))`.
pub fn predict(params: &ModelParams, tokens: &[usize]) -> Result<ProbDist> {
    Ok(softmax(&forward(params, tokens)?))
}
