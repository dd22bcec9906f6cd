//! Line-delimited outcome logs: one JSON object per evaluated sample.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{parse_err, validation, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub method: String,
    pub seed: u64,
    pub sample_id: usize,
    pub base_label: usize,
    pub predicted_label: usize,
    pub true_label: Option<usize>,
    /// Bit `g` is set when the sample belongs to group `g`.
    pub group_bits: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_before: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_after: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<bool>,
}

pub fn group_bits(groups: &BTreeSet<usize>) -> u64 {
    groups
        .iter()
        .filter(|&&g| g < 64)
        .fold(0u64, |acc, &g| acc | (1 << g))
}

pub fn groups_from_bits(bits: u64) -> BTreeSet<usize> {
    (0..64).filter(|g| bits & (1 << g) != 0).collect()
}

pub fn render_log(records: &[OutcomeRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("outcome record serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_log(text: &str) -> Result<Vec<OutcomeRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| parse_err(i + 1, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(validation("outcome log is empty"));
    }
    Ok(out)
}

pub fn write_log(path: &Path, records: &[OutcomeRecord]) -> Result<()> {
    std::fs::write(path, render_log(records))?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<OutcomeRecord>> {
    parse_log(&std::fs::read_to_string(path)?)
}
