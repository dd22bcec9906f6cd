//! Checkpoint file: one JSON object holding the vocabulary and every weight,
//! each written with 17 significant digits so a save/load cycle is exact.
//!
//! ```text
//! {"format":"memocl-checkpoint","format_version":1,"V":..,"d":..,"C":..,
//!  "unknown_index":0,"vocabulary":[..],
//!  "embeddings":[[..],..],"head_weights":[[..],..],"head_bias":[..]}
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::params::{Dims, ModelParams};
use super::vocab::Vocabulary;
use crate::error::{validation, Result};

pub const CHECKPOINT_FORMAT: &str = "memocl-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab: Vocabulary,
    pub params: ModelParams,
}

#[derive(Deserialize)]
struct Raw {
    format: String,
    format_version: u32,
    #[serde(rename = "V")]
    vocab_size: usize,
    d: usize,
    #[serde(rename = "C")]
    classes: usize,
    unknown_index: usize,
    vocabulary: Vec<String>,
    embeddings: Vec<Vec<f64>>,
    head_weights: Vec<Vec<f64>>,
    head_bias: Vec<f64>,
}

fn push_num(out: &mut String, v: f64) {
    // {:.16e} prints 17 significant digits, enough to round-trip any f64.
    write!(out, "{v:.16e}").expect("write to String");
}

fn push_row(out: &mut String, row: &[f64]) {
    out.push('[');
    for (i, &v) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_num(out, v);
    }
    out.push(']');
}

fn push_matrix(out: &mut String, data: &[f64], cols: usize) {
    out.push('[');
    for (i, row) in data.chunks(cols).enumerate() {
        if i > 0 {
            out.push_str(",\n  ");
        }
        push_row(out, row);
    }
    out.push(']');
}

pub fn render_checkpoint(ckpt: &Checkpoint) -> String {
    let dims = ckpt.params.dims();
    let mut out = String::new();
    out.push_str("{\"format\":");
    out.push_str(&serde_json::to_string(CHECKPOINT_FORMAT).expect("string"));
    writeln!(
        out,
        ",\"format_version\":{CHECKPOINT_VERSION},\"V\":{},\"d\":{},\"C\":{},\"unknown_index\":{},",
        dims.vocab,
        dims.dim,
        dims.classes,
        ckpt.vocab.unknown_index()
    )
    .expect("write to String");
    out.push_str("\"vocabulary\":");
    out.push_str(&serde_json::to_string(ckpt.vocab.tokens()).expect("strings"));
    out.push_str(",\n\"embeddings\":");
    push_matrix(&mut out, ckpt.params.embeddings(), dims.dim);
    out.push_str(",\n\"head_weights\":");
    push_matrix(&mut out, ckpt.params.head_weights(), dims.classes);
    out.push_str(",\n\"head_bias\":");
    push_row(&mut out, ckpt.params.head_bias());
    out.push_str("}\n");
    out
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let raw: Raw = serde_json::from_str(text)
        .map_err(|e| crate::error::parse_err(e.line(), e.to_string()))?;
    if raw.format != CHECKPOINT_FORMAT || raw.format_version != CHECKPOINT_VERSION {
        return Err(validation(format!(
            "unsupported checkpoint {:?} version {}",
            raw.format, raw.format_version
        )));
    }
    let dims = Dims::new(raw.vocab_size, raw.d, raw.classes)?;
    if raw.vocabulary.len() != dims.vocab {
        return Err(validation(format!(
            "vocabulary has {} tokens but V = {}",
            raw.vocabulary.len(),
            dims.vocab
        )));
    }
    let flatten = |rows: Vec<Vec<f64>>, n_rows: usize, cols: usize, what: &str| {
        if rows.len() != n_rows || rows.iter().any(|r| r.len() != cols) {
            return Err(validation(format!("{what} must be {n_rows}x{cols}")));
        }
        Ok(rows.into_iter().flatten().collect::<Vec<f64>>())
    };
    let embeddings = flatten(raw.embeddings, dims.vocab, dims.dim, "embeddings")?;
    let head_weights = flatten(raw.head_weights, dims.dim, dims.classes, "head_weights")?;
    let vocab = Vocabulary::new(raw.vocabulary, raw.unknown_index)?;
    let params = ModelParams::from_parts(dims, embeddings, head_weights, raw.head_bias)?;
    Ok(Checkpoint { vocab, params })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, render_checkpoint(ckpt))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    parse_checkpoint(&std::fs::read_to_string(path)?)
}
