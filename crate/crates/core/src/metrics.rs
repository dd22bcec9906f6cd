//! Average accuracy, worst-group accuracy and the correction-to-corruption
//! ratio of a method's predictions against a frozen baseline.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedPrediction {
    pub true_label: usize,
    pub base_pred: usize,
    pub method_pred: usize,
    pub groups: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Base,
    Method,
}

impl GroupedPrediction {
    fn pred(&self, which: Which) -> usize {
        match which {
            Which::Base => self.base_pred,
            Which::Method => self.method_pred,
        }
    }

    fn correct(&self, which: Which) -> bool {
        self.pred(which) == self.true_label
    }
}

/// Corrections over corruptions, or `Undefined` when only corrections occur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ccr {
    Ratio(f64),
    Undefined,
}

impl Ccr {
    pub fn value(self) -> Option<f64> {
        match self {
            Ccr::Ratio(v) => Some(v),
            Ccr::Undefined => None,
        }
    }
}

impl fmt::Display for Ccr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ccr::Ratio(v) => write!(f, "{v:.2}"),
            Ccr::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Ccr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ccr::Ratio(v) => s.serialize_f64(*v),
            Ccr::Undefined => s.serialize_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcrCounts {
    pub corrections: usize,
    pub corruptions: usize,
    pub ratio: Ccr,
}

pub fn average_accuracy(preds: &[GroupedPrediction], which: Which) -> Result<f64> {
    if preds.is_empty() {
        return Err(invalid("accuracy of an empty prediction log"));
    }
    let hits = preds.iter().filter(|p| p.correct(which)).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Accuracy per group index `0..num_groups`; `None` for empty groups.
pub fn per_group_accuracy(
    preds: &[GroupedPrediction],
    which: Which,
    num_groups: usize,
) -> Vec<Option<f64>> {
    let mut hits = vec![0usize; num_groups];
    let mut totals = vec![0usize; num_groups];
    for p in preds {
        let ok = p.correct(which);
        for &g in p.groups.iter().filter(|&&g| g < num_groups) {
            totals[g] += 1;
            hits[g] += ok as usize;
        }
    }
    hits.iter()
        .zip(&totals)
        .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
        .collect()
}

/// Minimum accuracy over nonempty groups and the (smallest) group attaining it.
pub fn worst_group_accuracy(preds: &[GroupedPrediction], which: Which) -> Result<(f64, usize)> {
    let num_groups = preds
        .iter()
        .flat_map(|p| p.groups.iter())
        .max()
        .map(|&g| g + 1)
        .ok_or_else(|| invalid("no sample carries a group"))?;
    let per = per_group_accuracy(preds, which, num_groups);
    worst_of(&per).ok_or_else(|| invalid("no sample carries a group"))
}

fn worst_of(per: &[Option<f64>]) -> Option<(f64, usize)> {
    let mut worst: Option<(f64, usize)> = None;
    for (g, acc) in per.iter().enumerate() {
        if let Some(a) = *acc {
            if worst.is_none_or(|(w, _)| a < w) {
                worst = Some((a, g));
            }
        }
    }
    worst
}

pub fn ccr(preds: &[GroupedPrediction]) -> Result<CcrCounts> {
    if preds.is_empty() {
        return Err(invalid("correction ratio of an empty prediction log"));
    }
    let corrections = preds
        .iter()
        .filter(|p| !p.correct(Which::Base) && p.correct(Which::Method))
        .count();
    let corruptions = preds
        .iter()
        .filter(|p| p.correct(Which::Base) && !p.correct(Which::Method))
        .count();
    Ok(CcrCounts {
        corrections,
        corruptions,
        ratio: ccr_ratio(corrections, corruptions),
    })
}

pub fn ccr_ratio(corrections: usize, corruptions: usize) -> Ccr {
    match (corrections, corruptions) {
        (0, 0) => Ccr::Ratio(1.0),
        (_, 0) => Ccr::Undefined,
        (a, b) => Ccr::Ratio(a as f64 / b as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n: usize,
    pub average_accuracy: f64,
    pub base_average_accuracy: f64,
    pub per_group_accuracy: Vec<Option<f64>>,
    pub worst_group_accuracy: f64,
    pub worst_group_index: usize,
    pub base_worst_group_accuracy: f64,
    pub corrections: usize,
    pub corruptions: usize,
    pub unchanged_correct: usize,
    pub unchanged_incorrect: usize,
    pub ccr: Ccr,
}

impl MetricsReport {
    pub fn compute(preds: &[GroupedPrediction], num_groups: usize) -> Result<Self> {
        let average_accuracy = average_accuracy(preds, Which::Method)?;
        let base_average_accuracy = average_accuracy_base(preds)?;
        let per = per_group_accuracy(preds, Which::Method, num_groups);
        let (worst_group_accuracy, worst_group_index) =
            worst_of(&per).ok_or_else(|| invalid("no sample carries a group"))?;
        let (base_worst_group_accuracy, _) =
            worst_of(&per_group_accuracy(preds, Which::Base, num_groups))
                .expect("same membership as above");
        let counts = ccr(preds)?;
        let unchanged_correct = preds
            .iter()
            .filter(|p| p.correct(Which::Base) && p.correct(Which::Method))
            .count();
        let unchanged_incorrect = preds.len() - unchanged_correct - counts.corrections - counts.corruptions;
        Ok(Self {
            n: preds.len(),
            average_accuracy,
            base_average_accuracy,
            per_group_accuracy: per,
            worst_group_accuracy,
            worst_group_index,
            base_worst_group_accuracy,
            corrections: counts.corrections,
            corruptions: counts.corruptions,
            unchanged_correct,
            unchanged_incorrect,
            ccr: counts.ratio,
        })
    }
}

fn average_accuracy_base(preds: &[GroupedPrediction]) -> Result<f64> {
    average_accuracy(preds, Which::Base)
}
