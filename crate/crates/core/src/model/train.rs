use super::grad::cross_entropy_loss_and_grad;
use super::ops::predict;
use super::optim::{apply_update, OptimizerState};
use super::params::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub eta: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            eta: 0.5,
            batch_size: 16,
            seed: 0,
        }
    }
}

pub fn mean_cross_entropy(params: &ModelParams, data: &[(Vec<usize>, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid("empty dataset"));
    }
    let mut total = 0.0;
    for (tokens, y) in data {
        total -= predict(params, tokens)?.get(*y).ln();
    }
    Ok(total / data.len() as f64)
}

pub fn accuracy(params: &ModelParams, data: &[(Vec<usize>, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid("empty dataset"));
    }
    let mut hits = 0usize;
    for (tokens, y) in data {
        if predict(params, tokens)?.argmax() == *y {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Mini-batch SGD on mean cross-entropy, reshuffling every epoch from
/// `cfg.seed`. If training somehow ends above the starting loss, the
/// starting parameters are returned instead.
pub fn train_source(
    params: &ModelParams,
    data: &[(Vec<usize>, usize)],
    cfg: &TrainConfig,
) -> Result<ModelParams> {
    if data.is_empty() {
        return Err(invalid("cannot train on an empty dataset"));
    }
    if cfg.batch_size == 0 {
        return Err(invalid("batch size must be >= 1"));
    }
    let classes = params.dims().classes;
    if let Some((_, y)) = data.iter().find(|(_, y)| *y >= classes) {
        return Err(invalid(format!("label {y} out of range for {classes} classes")));
    }
    if cfg.epochs == 0 {
        return Ok(params.clone());
    }
    let initial_loss = mean_cross_entropy(params, data)?;
    let mut rng = Rng::new(cfg.seed);
    let mut opt = OptimizerState::sgd();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut current = params.clone();
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&[usize]> = chunk.iter().map(|&i| data[i].0.as_slice()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| data[i].1).collect();
            let (_, grad) = cross_entropy_loss_and_grad(&current, &batch, &labels)?;
            current = apply_update(&current, &grad, &mut opt, cfg.eta)?;
        }
    }
    if mean_cross_entropy(&current, data)? > initial_loss {
        return Ok(params.clone());
    }
    Ok(current)
}
