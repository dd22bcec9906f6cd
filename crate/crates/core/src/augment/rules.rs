use std::path::Path;

use crate::error::{invalid, parse_err, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub pattern: Vec<String>,
    pub replacement: Vec<String>,
}

/// Ordered rewrite rules standing in for a neural paraphraser.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParaphraseRuleSet {
    rules: Vec<RewriteRule>,
}

impl ParaphraseRuleSet {
    pub fn new(rules: Vec<RewriteRule>) -> Result<Self> {
        if rules.iter().any(|r| r.pattern.is_empty()) {
            return Err(invalid("rewrite patterns must be nonempty"));
        }
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.rules
            .iter()
            .flat_map(|r| r.pattern.iter().chain(&r.replacement).map(String::as_str))
    }

    /// First rule (in rule order) whose pattern matches at `pos`.
    fn match_at(&self, tokens: &[String], pos: usize) -> Option<&RewriteRule> {
        self.rules
            .iter()
            .find(|r| tokens[pos..].starts_with(&r.pattern))
    }

    /// Parses `pattern tokens<TAB>replacement tokens` lines. The replacement
    /// may be empty (a deletion rule).
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (pat, rep) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(i + 1, "expected pattern<TAB>replacement"))?;
            let pattern: Vec<String> = pat.split_whitespace().map(str::to_string).collect();
            if pattern.is_empty() {
                return Err(parse_err(i + 1, "empty pattern"));
            }
            let replacement = rep.split_whitespace().map(str::to_string).collect();
            rules.push(RewriteRule {
                pattern,
                replacement,
            });
        }
        Self::new(rules)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.pattern.join(" "));
            out.push('\t');
            out.push_str(&r.replacement.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Scans left to right. At each position the first matching rule is applied
/// with probability 1/2 (one draw); an applied rewrite skips past its match,
/// a declined one advances a single token.
pub fn paraphrase(tokens: &[String], rules: &ParaphraseRuleSet, rng: &mut Rng) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut pos = 0;
    while pos < tokens.len() {
        match rules.match_at(tokens, pos) {
            Some(rule) if rng.bernoulli(0.5) => {
                out.extend(rule.replacement.iter().cloned());
                pos += rule.pattern.len();
            }
            _ => {
                out.push(tokens[pos].clone());
                pos += 1;
            }
        }
    }
    out
}
