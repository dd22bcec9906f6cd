//! Analytic gradients of the two training objectives.
//!
//! Both losses reduce to a per-sample logit gradient `dz`, which is pushed
//! back through the linear head (`dW += h ⊗ dz`, `db += dz`) and the mean
//! pooling (`dE[t] += (W dz) / len` for every occurrence of token `t`).

use super::ops::{entropy, head, marginal, pool, softmax, ProbDist};
use super::params::{Gradient, ModelParams};
use crate::error::{invalid, Result};
use crate::par;

struct Scored {
    pooled: Vec<f64>,
    probs: ProbDist,
}

fn score_batch(params: &ModelParams, batch: &[Vec<usize>]) -> Result<Vec<Scored>> {
    par::map(batch, |tokens| {
        let pooled = pool(params, tokens)?;
        let probs = softmax(&head(params, &pooled));
        Ok(Scored { pooled, probs })
    })
    .into_iter()
    .collect()
}

fn backward_into(
    params: &ModelParams,
    tokens: &[usize],
    pooled: &[f64],
    dz: &[f64],
    grad: &mut Gradient,
) {
    let dims = params.dims();
    let classes = dims.classes;
    for (k, &h) in pooled.iter().enumerate() {
        let row = &mut grad.head_weights[k * classes..(k + 1) * classes];
        for (g, &d) in row.iter_mut().zip(dz) {
            *g += h * d;
        }
    }
    for (g, &d) in grad.head_bias.iter_mut().zip(dz) {
        *g += d;
    }
    if tokens.is_empty() {
        return;
    }
    let scale = 1.0 / tokens.len() as f64;
    let dh: Vec<f64> = (0..dims.dim)
        .map(|k| {
            let row = &params.head_weights()[k * classes..(k + 1) * classes];
            row.iter().zip(dz).map(|(w, d)| w * d).sum::<f64>() * scale
        })
        .collect();
    for &t in tokens {
        let row = &mut grad.embeddings[t * dims.dim..(t + 1) * dims.dim];
        for (g, d) in row.iter_mut().zip(&dh) {
            *g += d;
        }
    }
}

/// Entropy of the marginal prediction over `batch`, without the gradient.
pub fn entropy_loss(params: &ModelParams, batch: &[Vec<usize>]) -> Result<f64> {
    if batch.is_empty() {
        return Err(invalid("entropy loss of an empty batch"));
    }
    let scored = score_batch(params, batch)?;
    let dists: Vec<ProbDist> = scored.into_iter().map(|s| s.probs).collect();
    Ok(entropy(&marginal(&dists)?))
}

/// `H(p̄)` with `p̄ = mean_n softmax(f(x̃_n))`, and its exact gradient.
///
/// With `s = -(1 + ln p̄)`, the logit gradient of sample `n` is
/// `(1/N) · p_n ⊙ (s - (s·p_n))`.
pub fn entropy_loss_and_grad(
    params: &ModelParams,
    batch: &[Vec<usize>],
) -> Result<(f64, Gradient)> {
    if batch.is_empty() {
        return Err(invalid("entropy loss of an empty batch"));
    }
    let scored = score_batch(params, batch)?;
    let dists: Vec<ProbDist> = scored.iter().map(|s| s.probs.clone()).collect();
    let mean = marginal(&dists)?;
    let loss = entropy(&mean);
    let s: Vec<f64> = mean.as_slice().iter().map(|&q| -(1.0 + q.ln())).collect();
    let inv_n = 1.0 / batch.len() as f64;

    let mut grad = Gradient::zeros(params.dims());
    for (tokens, sc) in batch.iter().zip(&scored) {
        let p = sc.probs.as_slice();
        let sp: f64 = s.iter().zip(p).map(|(a, b)| a * b).sum();
        let dz: Vec<f64> = p
            .iter()
            .zip(&s)
            .map(|(&pi, &si)| inv_n * pi * (si - sp))
            .collect();
        backward_into(params, tokens, &sc.pooled, &dz, &mut grad);
    }
    Ok((loss, grad))
}

/// Mean cross-entropy of `batch` against `labels`, and its gradient.
pub fn cross_entropy_loss_and_grad(
    params: &ModelParams,
    batch: &[&[usize]],
    labels: &[usize],
) -> Result<(f64, Gradient)> {
    if batch.is_empty() || batch.len() != labels.len() {
        return Err(invalid("cross-entropy needs a nonempty batch with one label per sample"));
    }
    let classes = params.dims().classes;
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(invalid(format!("label {bad} out of range for {classes} classes")));
    }
    let inv_n = 1.0 / batch.len() as f64;
    let mut grad = Gradient::zeros(params.dims());
    let mut loss = 0.0;
    for (tokens, &y) in batch.iter().zip(labels) {
        let pooled = pool(params, tokens)?;
        let p = softmax(&head(params, &pooled));
        loss -= p.get(y).ln();
        let dz: Vec<f64> = p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(c, &pc)| inv_n * (pc - if c == y { 1.0 } else { 0.0 }))
            .collect();
        backward_into(params, tokens, &pooled, &dz, &mut grad);
    }
    Ok((loss * inv_n, grad))
}
