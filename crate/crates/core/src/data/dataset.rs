use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DEFAULT_NUM_CLASSES, DEFAULT_NUM_GROUPS};
use crate::error::{parse_err, validation, Result};

pub const DATASET_FORMAT: &str = "dataset";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub text: String,
    pub label: usize,
    pub groups: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub num_classes: usize,
    pub num_groups: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    #[serde(default = "default_classes")]
    num_classes: usize,
    #[serde(default = "default_groups")]
    num_groups: usize,
}

fn default_classes() -> usize {
    DEFAULT_NUM_CLASSES
}

fn default_groups() -> usize {
    DEFAULT_NUM_GROUPS
}

fn check_record(r: &Record, classes: usize, groups: usize) -> std::result::Result<(), String> {
    if r.label >= classes {
        return Err(format!("label {} out of range for {classes} classes", r.label));
    }
    if let Some(g) = r.groups.iter().find(|&&g| g >= groups) {
        return Err(format!("group {g} out of range for {groups} groups"));
    }
    Ok(())
}

impl Dataset {
    pub fn new(records: Vec<Record>, num_classes: usize, num_groups: usize) -> Result<Self> {
        if records.is_empty() {
            return Err(validation("dataset has no records"));
        }
        if num_classes < 2 {
            return Err(validation("a dataset needs at least two classes"));
        }
        for (i, r) in records.iter().enumerate() {
            check_record(r, num_classes, num_groups)
                .map_err(|m| validation(format!("record {i}: {m}")))?;
        }
        Ok(Self {
            records,
            num_classes,
            num_groups,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Parses the line-delimited format: a `{"format":"dataset","version":1}`
/// header (optionally carrying `num_classes`/`num_groups`), then one
/// `{"text","label","groups"}` object per line.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((hline, header)) = lines.next() else {
        return Err(validation("dataset file is empty"));
    };
    let header: Header =
        serde_json::from_str(header).map_err(|e| parse_err(hline + 1, e.to_string()))?;
    if header.format != DATASET_FORMAT || header.version != FORMAT_VERSION {
        return Err(validation(format!(
            "line {}: expected format \"{DATASET_FORMAT}\" version {FORMAT_VERSION}",
            hline + 1
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let r: Record = serde_json::from_str(line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        check_record(&r, header.num_classes, header.num_groups)
            .map_err(|m| validation(format!("line {}: {m}", i + 1)))?;
        records.push(r);
    }
    if records.is_empty() {
        return Err(validation("dataset file has a header but no records"));
    }
    Dataset::new(records, header.num_classes, header.num_groups)
}

pub fn render_dataset(ds: &Dataset) -> String {
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: FORMAT_VERSION,
        num_classes: ds.num_classes,
        num_groups: ds.num_groups,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in &ds.records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    std::fs::write(path, render_dataset(ds))?;
    Ok(())
}
