use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{invalid, parse_err, Result};
use crate::rng::Rng;

/// Paraphrase database: word → candidate replacements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self> {
        for (key, syns) in &entries {
            if key.is_empty() || syns.is_empty() {
                return Err(invalid(format!("lexicon entry {key:?} is empty")));
            }
            if syns.iter().any(|s| s.is_empty() || s == key) {
                return Err(invalid(format!(
                    "lexicon entry {key:?} lists itself or an empty synonym"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<String>> {
        &self.entries
    }

    /// Every word mentioned, keys and synonyms alike.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .flat_map(|(k, v)| std::iter::once(k.as_str()).chain(v.iter().map(String::as_str)))
    }

    /// Parses `word<TAB>syn1,syn2,…` lines. Blank lines and `#` comments are
    /// skipped; repeated keys merge their synonym lists.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(i + 1, "expected word<TAB>synonyms"))?;
            let key = key.trim();
            let syns: Vec<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            if key.is_empty() || syns.is_empty() {
                return Err(parse_err(i + 1, "empty word or synonym list"));
            }
            if syns.iter().any(|s| s == key) {
                return Err(parse_err(i + 1, format!("{key:?} lists itself as a synonym")));
            }
            let slot = entries.entry(key.to_string()).or_default();
            for s in syns {
                if !slot.contains(&s) {
                    slot.push(s);
                }
            }
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('\t');
            out.push_str(&v.join(","));
            out.push('\n');
        }
        out
    }
}

/// Replaces each lexicon word with probability `rate` by a uniformly drawn
/// synonym. Words absent from the lexicon pass through without consuming draws.
pub fn lexicon_replace(
    tokens: &[String],
    lexicon: &SynonymLexicon,
    rate: f64,
    rng: &mut Rng,
) -> Vec<String> {
    tokens
        .iter()
        .map(|t| match lexicon.get(t) {
            Some(syns) if rng.bernoulli(rate) => syns[rng.below(syns.len())].clone(),
            _ => t.clone(),
        })
        .collect()
}
