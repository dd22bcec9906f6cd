//! The augmentation family and its uniform sampler.
//!
//! Three augmenters are available: lexicon synonym replacement, word-vector
//! neighbour replacement and rule-based paraphrasing. A set holds any nonempty
//! subset; each augmented copy is produced by exactly one augmenter drawn
//! uniformly from those present.

mod lexicon;
mod rules;
mod vectors;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use lexicon::{lexicon_replace, SynonymLexicon};
pub use rules::{paraphrase, ParaphraseRuleSet, RewriteRule};
pub use vectors::{embedding_replace, NeighborIndex, WordVectorTable};

use crate::error::{invalid, Result};
use crate::rng::Rng;

pub const DEFAULT_REPLACEMENT_RATE: f64 = 0.3;
pub const DEFAULT_NEIGHBOR_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmenterKind {
    Lexicon,
    Embedding,
    Paraphrase,
}

impl fmt::Display for AugmenterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AugmenterKind::Lexicon => "lexicon",
            AugmenterKind::Embedding => "embedding",
            AugmenterKind::Paraphrase => "paraphrase",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmenterSet {
    lexicon: Option<SynonymLexicon>,
    neighbors: Option<NeighborIndex>,
    rules: Option<ParaphraseRuleSet>,
    replacement_rate: f64,
    present: Vec<AugmenterKind>,
}

#[derive(Debug, Clone)]
pub struct AugmenterSetBuilder {
    lexicon: Option<SynonymLexicon>,
    vectors: Option<WordVectorTable>,
    rules: Option<ParaphraseRuleSet>,
    replacement_rate: f64,
    neighbor_count: usize,
}

impl Default for AugmenterSetBuilder {
    fn default() -> Self {
        Self {
            lexicon: None,
            vectors: None,
            rules: None,
            replacement_rate: DEFAULT_REPLACEMENT_RATE,
            neighbor_count: DEFAULT_NEIGHBOR_COUNT,
        }
    }
}

impl AugmenterSetBuilder {
    pub fn lexicon(mut self, lexicon: SynonymLexicon) -> Self {
        self.lexicon = Some(lexicon);
        self
    }

    pub fn vectors(mut self, table: WordVectorTable) -> Self {
        self.vectors = Some(table);
        self
    }

    pub fn rules(mut self, rules: ParaphraseRuleSet) -> Self {
        self.rules = Some(rules);
        self
    }

    pub fn replacement_rate(mut self, rate: f64) -> Self {
        self.replacement_rate = rate;
        self
    }

    pub fn neighbor_count(mut self, k: usize) -> Self {
        self.neighbor_count = k;
        self
    }

    pub fn build(self) -> Result<AugmenterSet> {
        if !(self.replacement_rate > 0.0 && self.replacement_rate <= 1.0) {
            return Err(invalid(format!(
                "replacement rate must lie in (0, 1], got {}",
                self.replacement_rate
            )));
        }
        if self.neighbor_count == 0 {
            return Err(invalid("neighbor count must be >= 1"));
        }
        let neighbors = self
            .vectors
            .map(|t| NeighborIndex::build(t, self.neighbor_count))
            .transpose()?;
        let mut present = Vec::new();
        if self.lexicon.is_some() {
            present.push(AugmenterKind::Lexicon);
        }
        if neighbors.is_some() {
            present.push(AugmenterKind::Embedding);
        }
        if self.rules.is_some() {
            present.push(AugmenterKind::Paraphrase);
        }
        if present.is_empty() {
            return Err(invalid("an augmenter set needs at least one augmenter"));
        }
        Ok(AugmenterSet {
            lexicon: self.lexicon,
            neighbors,
            rules: self.rules,
            replacement_rate: self.replacement_rate,
            present,
        })
    }
}

impl AugmenterSet {
    pub fn builder() -> AugmenterSetBuilder {
        AugmenterSetBuilder::default()
    }

    /// A set whose only member is an empty rule set: every augmentation is
    /// the input itself.
    pub fn identity() -> Self {
        Self::builder()
            .rules(ParaphraseRuleSet::default())
            .build()
            .expect("one augmenter present")
    }

    pub fn present(&self) -> &[AugmenterKind] {
        &self.present
    }

    pub fn replacement_rate(&self) -> f64 {
        self.replacement_rate
    }

    pub fn neighbor_count(&self) -> Option<usize> {
        self.neighbors.as_ref().map(NeighborIndex::k_nn)
    }

    pub fn lexicon(&self) -> Option<&SynonymLexicon> {
        self.lexicon.as_ref()
    }

    pub fn neighbors(&self) -> Option<&NeighborIndex> {
        self.neighbors.as_ref()
    }

    pub fn rules(&self) -> Option<&ParaphraseRuleSet> {
        self.rules.as_ref()
    }

    /// Every word any augmenter can emit.
    pub fn output_words(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        if let Some(l) = &self.lexicon {
            out.extend(l.words());
        }
        if let Some(n) = &self.neighbors {
            out.extend(n.table().words().iter().map(String::as_str));
        }
        if let Some(r) = &self.rules {
            out.extend(r.words());
        }
        out
    }

    /// Uniform draw over present augmenters; one rng draw.
    pub fn sample_augmenter(&self, rng: &mut Rng) -> AugmenterKind {
        self.present[rng.below(self.present.len())]
    }

    pub fn apply(&self, kind: AugmenterKind, tokens: &[String], rng: &mut Rng) -> Result<Vec<String>> {
        let missing = || invalid(format!("augmenter {kind} is not in this set"));
        Ok(match kind {
            AugmenterKind::Lexicon => {
                let l = self.lexicon.as_ref().ok_or_else(missing)?;
                lexicon_replace(tokens, l, self.replacement_rate, rng)
            }
            AugmenterKind::Embedding => {
                let n = self.neighbors.as_ref().ok_or_else(missing)?;
                embedding_replace(tokens, n, self.replacement_rate, rng)
            }
            AugmenterKind::Paraphrase => {
                let r = self.rules.as_ref().ok_or_else(missing)?;
                paraphrase(tokens, r, rng)
            }
        })
    }

    /// Samples one augmenter and applies it.
    pub fn augment(&self, tokens: &[String], rng: &mut Rng) -> Vec<String> {
        let kind = self.sample_augmenter(rng);
        self.apply(kind, tokens, rng)
            .expect("sampled augmenters are always present")
    }
}
