use std::collections::HashMap;

use crate::error::{invalid, Result};

pub const UNKNOWN_TOKEN: &str = "<unk>";

/// Lowercases and splits on every character that is neither alphanumeric nor
/// an apostrophe, so "Don't stop!" becomes `["don't", "stop"]`.
pub fn split_words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    unknown: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from distinct tokens. `unknown` must index one of them.
    pub fn new(tokens: Vec<String>, unknown: usize) -> Result<Self> {
        if unknown >= tokens.len() {
            return Err(invalid(format!(
                "unknown-token index {unknown} out of range for {} tokens",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(invalid(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self {
            tokens,
            index,
            unknown,
        })
    }

    /// `<unk>` first, then every distinct word in first-seen order.
    pub fn from_words<'a, I>(words: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut tokens = vec![UNKNOWN_TOKEN.to_string()];
        let mut index = HashMap::new();
        index.insert(UNKNOWN_TOKEN.to_string(), 0);
        for w in words {
            if !index.contains_key(w) {
                index.insert(w.to_string(), tokens.len());
                tokens.push(w.to_string());
            }
        }
        Self {
            tokens,
            index,
            unknown: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn unknown_index(&self) -> usize {
        self.unknown
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(self.unknown)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn lookup_all<S: AsRef<str>>(&self, words: &[S]) -> Vec<usize> {
        words.iter().map(|w| self.lookup(w.as_ref())).collect()
    }
}

pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<usize> {
    vocab.lookup_all(&split_words(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vocabulary {
        Vocabulary::new(vec!["hello".into(), "world".into(), "<unk>".into()], 2).unwrap()
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", &toy()).is_empty());
    }

    #[test]
    fn punctuation_and_case() {
        assert_eq!(tokenize("Hello, world", &toy()), vec![0, 1]);
    }

    #[test]
    fn unknown_word() {
        assert_eq!(tokenize("hello zzz", &toy()), vec![0, 2]);
    }

    #[test]
    fn apostrophes_stay_inside_words() {
        assert_eq!(split_words("I DON'T agree."), vec!["i", "don't", "agree"]);
    }

    #[test]
    fn rejects_duplicates_and_bad_unknown() {
        assert!(Vocabulary::new(vec!["a".into(), "a".into()], 0).is_err());
        assert!(Vocabulary::new(vec!["a".into()], 1).is_err());
    }

    #[test]
    fn from_words_dedups() {
        let v = Vocabulary::from_words(["b", "a", "b"]);
        assert_eq!(v.tokens(), &["<unk>", "b", "a"]);
        assert_eq!(v.lookup("a"), 2);
        assert_eq!(v.lookup("zz"), 0);
    }
}
