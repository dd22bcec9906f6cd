use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Record, FORMAT_VERSION};
use crate::error::{parse_err, validation, Result};
use crate::model::split_words;
use crate::rng::Rng;

/// Replacement for tokens knocked out by shift noise. It is not a word the
/// tokenizer can produce from ordinary text, so it always maps to `<unk>`.
pub const NOISE_MARKER: &str = "<oov>";
pub const SHIFT_FORMAT: &str = "shift_spec";

/// A label-preserving lexical shift: mapped words are rewritten with
/// probability `substitution_coverage`, and any word is then replaced by
/// [`NOISE_MARKER`] with probability `noise_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub substitution_map: BTreeMap<String, String>,
    pub substitution_coverage: f64,
    pub noise_rate: f64,
    pub seed: u64,
}

impl ShiftSpec {
    pub fn identity(seed: u64) -> Self {
        Self {
            substitution_map: BTreeMap::new(),
            substitution_coverage: 0.0,
            noise_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("substitution_coverage", self.substitution_coverage),
            ("noise_rate", self.noise_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(validation(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (from, to) in &self.substitution_map {
            if from.is_empty() || to.is_empty() {
                return Err(validation("substitution words must be nonempty"));
            }
            if self.substitution_map.contains_key(to) {
                return Err(validation(format!(
                    "substitution {from:?} -> {to:?} chains into another mapped word"
                )));
            }
        }
        Ok(())
    }
}

/// Applies `spec` record by record with one rng seeded from `spec.seed`.
/// Records where no word changed keep their original text verbatim; changed
/// records are re-joined from lowercased words.
pub fn apply_shift(ds: &Dataset, spec: &ShiftSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let records = ds
        .records
        .iter()
        .map(|r| {
            let mut changed = false;
            let words: Vec<String> = split_words(&r.text)
                .into_iter()
                .map(|w| {
                    let mut out = w;
                    if let Some(to) = spec.substitution_map.get(&out) {
                        if rng.bernoulli(spec.substitution_coverage) {
                            out = to.clone();
                            changed = true;
                        }
                    }
                    if rng.bernoulli(spec.noise_rate) {
                        out = NOISE_MARKER.to_string();
                        changed = true;
                    }
                    out
                })
                .collect();
            Record {
                text: if changed { words.join(" ") } else { r.text.clone() },
                label: r.label,
                groups: r.groups.clone(),
            }
        })
        .collect();
    Dataset::new(records, ds.num_classes, ds.num_groups)
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub fn parse_shift_spec(text: &str) -> Result<ShiftSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines
        .next()
        .ok_or_else(|| validation("shift spec file is empty"))?;
    let header: Header = serde_json::from_str(header).map_err(|e| parse_err(hl + 1, e.to_string()))?;
    if header.format != SHIFT_FORMAT || header.version != FORMAT_VERSION {
        return Err(validation(format!(
            "expected format \"{SHIFT_FORMAT}\" version {FORMAT_VERSION}"
        )));
    }
    let (bl, body) = lines
        .next()
        .ok_or_else(|| validation("shift spec file has no body record"))?;
    let spec: ShiftSpec = serde_json::from_str(body).map_err(|e| parse_err(bl + 1, e.to_string()))?;
    if let Some((extra, _)) = lines.next() {
        return Err(parse_err(extra + 1, "unexpected extra record"));
    }
    spec.validate()?;
    Ok(spec)
}

pub fn render_shift_spec(spec: &ShiftSpec) -> String {
    let header = Header {
        format: SHIFT_FORMAT.into(),
        version: FORMAT_VERSION,
    };
    format!(
        "{}\n{}\n",
        serde_json::to_string(&header).expect("header serializes"),
        serde_json::to_string(spec).expect("spec serializes")
    )
}

pub fn load_shift_spec(path: &Path) -> Result<ShiftSpec> {
    parse_shift_spec(&std::fs::read_to_string(path)?)
}
