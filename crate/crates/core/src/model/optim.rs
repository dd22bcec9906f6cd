use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::params::{Gradient, ModelParams};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(invalid(format!("unknown optimizer {other:?} (expected sgd or adam)"))),
        }
    }
}

/// Learner state carried between updates. Moment buffers exist only for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    kind: OptimizerKind,
    step_count: u64,
    first_moment: Option<Gradient>,
    second_moment: Option<Gradient>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn sgd() -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            step_count: 0,
            first_moment: None,
            second_moment: None,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn adam(beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            step_count: 0,
            first_moment: None,
            second_moment: None,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn new(kind: OptimizerKind) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::sgd(),
            OptimizerKind::Adam => Self::adam(0.9, 0.999, 1e-8),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> Option<&Gradient> {
        self.first_moment.as_ref()
    }

    pub fn second_moment(&self) -> Option<&Gradient> {
        self.second_moment.as_ref()
    }
}

/// One optimizer step: returns the updated parameters and advances `opt`.
///
/// `eta == 0` is accepted and leaves the parameters untouched (Adam moments
/// still advance).
pub fn apply_update(
    params: &ModelParams,
    grad: &Gradient,
    opt: &mut OptimizerState,
    eta: f64,
) -> Result<ModelParams> {
    if params.dims() != grad.dims() {
        return Err(invalid(format!(
            "gradient dims {:?} do not match parameter dims {:?}",
            grad.dims(),
            params.dims()
        )));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid(format!("learning rate must be finite and >= 0, got {eta}")));
    }
    let mut next = params.clone();
    match opt.kind {
        OptimizerKind::Sgd => {
            for (dst, g) in next.blocks_mut().into_iter().zip(grad.blocks()) {
                for (p, gi) in dst.iter_mut().zip(g) {
                    *p -= eta * gi;
                }
            }
        }
        OptimizerKind::Adam => {
            let dims = params.dims();
            let m = opt.first_moment.get_or_insert_with(|| Gradient::zeros(dims));
            let t = (opt.step_count + 1) as f64;
            let (b1, b2, eps) = (opt.beta1, opt.beta2, opt.epsilon);
            for (mb, g) in m.blocks_mut().into_iter().zip(grad.blocks()) {
                for (mi, gi) in mb.iter_mut().zip(g) {
                    *mi = b1 * *mi + (1.0 - b1) * gi;
                }
            }
            let v = opt.second_moment.get_or_insert_with(|| Gradient::zeros(dims));
            for (vb, g) in v.blocks_mut().into_iter().zip(grad.blocks()) {
                for (vi, gi) in vb.iter_mut().zip(g) {
                    *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                }
            }
            let c1 = 1.0 - b1.powf(t);
            let c2 = 1.0 - b2.powf(t);
            let m = opt.first_moment.as_ref().expect("initialised above");
            let v = opt.second_moment.as_ref().expect("initialised above");
            for ((dst, mb), vb) in next.blocks_mut().into_iter().zip(m.blocks()).zip(v.blocks()) {
                for ((p, mi), vi) in dst.iter_mut().zip(mb).zip(vb) {
                    let m_hat = mi / c1;
                    let v_hat = vi / c2;
                    *p -= eta * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
    opt.step_count += 1;
    Ok(next)
}
