//! Generator for the synthetic sentiment benchmark.
//!
//! Records mix polarity words, topic words (which carry group membership)
//! and filler. The test-time shift rewrites polarity words into digit-for-vowel
//! spellings the source model never trained on. Augmentation resources are
//! built to look like real ones: the lexicon and word vectors know the
//! spelling variants for only part of the shifted vocabulary, and word-vector
//! neighbourhoods mix in antonyms and misspellings, so some augmentations
//! damage rather than repair the input.

use std::collections::{BTreeMap, BTreeSet};

use super::dataset::{Dataset, Record};
use super::shift::ShiftSpec;
use crate::augment::{ParaphraseRuleSet, RewriteRule, SynonymLexicon, WordVectorTable};
use crate::error::Result;
use crate::rng::Rng;

pub const POSITIVE_WORDS: [&str; 16] = [
    "good", "great", "excellent", "wonderful", "superb", "lovely", "brilliant", "enjoyable",
    "pleasant", "delightful", "amazing", "fantastic", "charming", "solid", "fine", "nice",
];

pub const NEGATIVE_WORDS: [&str; 16] = [
    "bad", "awful", "terrible", "horrible", "poor", "dreadful", "boring", "dull", "weak", "lousy",
    "mediocre", "annoying", "painful", "tedious", "ugly", "messy",
];

pub const FILLER_WORDS: [&str; 24] = [
    "the", "a", "this", "that", "movie", "film", "plot", "story", "was", "is", "really", "quite",
    "very", "and", "with", "overall", "it", "felt", "seemed", "honestly", "scenes", "part",
    "whole", "thing",
];

/// Two topic words per group; a record belongs to group `g` when it
/// contains one of `GROUP_WORDS[g]`.
pub const GROUP_WORDS: [[&str; 2]; 8] = [
    ["actor", "actress"],
    ["music", "soundtrack"],
    ["director", "directing"],
    ["script", "dialogue"],
    ["camera", "visuals"],
    ["ending", "finale"],
    ["cast", "characters"],
    ["budget", "effects"],
];

/// Rewrites vowels to look-alike digits: good → g00d, dull → dvll.
pub fn leet(word: &str) -> String {
    word.chars()
        .map(|c| match c {
            'o' => '0',
            'e' => '3',
            'a' => '4',
            'i' => '1',
            'u' => 'v',
            other => other,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub calibration_size: usize,
    /// Inclusive range for the number of label-polarity words per record.
    pub polarity_words: (usize, usize),
    /// Inclusive range for the number of filler words per record.
    pub filler_words: (usize, usize),
    /// Polarity words are drawn with probability proportional to
    /// `1 / rank^zipf_exponent`; zero gives a uniform draw.
    pub zipf_exponent: f64,
    /// How many of the most frequent words of each polarity the shift rewrites.
    pub shifted_per_class: usize,
    /// Draw distractors only from the words the shift leaves alone.
    pub mild_distractors: bool,
    /// Probability a record carries an opposite-polarity distractor word.
    pub distractor_rate: f64,
    /// Groups whose topic words are label-correlated in the training split:
    /// (group, favoured label, probability of that label).
    pub spurious_groups: Vec<(usize, usize, f64)>,
    pub shift_coverage: f64,
    pub shift_noise: f64,
    pub shift_seed: u64,
    /// Share of shifted spellings the lexicon maps back to their source word.
    pub lexicon_restore_fraction: f64,
    /// Opposite-polarity entries mixed into each polarity word's synonym list,
    /// as in thesaurus-derived lexicons that group related words.
    pub lexicon_antonyms: usize,
    /// Share of shifted spellings that get a word vector next to their source.
    pub vector_restore_fraction: f64,
    /// Share of non-restorable shifted spellings whose vector lands next to a
    /// random polarity word instead of among neutral words.
    pub decoy_fraction: f64,
    pub vector_width: usize,
    /// Weight of the shared "sentiment" axis relative to the polarity axis;
    /// larger values pull antonyms into each other's neighbourhoods.
    pub sentiment_axis: f64,
    pub polarity_axis: f64,
    pub vector_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            train_size: 2000,
            test_size: 2000,
            calibration_size: 500,
            polarity_words: (1, 3),
            filler_words: (2, 5),
            zipf_exponent: 0.0,
            shifted_per_class: 16,
            mild_distractors: false,
            distractor_rate: 0.2,
            spurious_groups: vec![(2, 0, 0.8), (5, 1, 0.8)],
            shift_coverage: 0.8,
            shift_noise: 0.05,
            shift_seed: 13,
            lexicon_restore_fraction: 0.5,
            lexicon_antonyms: 0,
            vector_restore_fraction: 0.5,
            decoy_fraction: 0.0,
            vector_width: 12,
            sentiment_axis: 1.0,
            polarity_axis: 0.8,
            vector_noise: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFixture {
    /// Labeled source-domain training split.
    pub train: Dataset,
    /// Labeled source-domain split for fitting class-weighted aggregation.
    pub calibration: Dataset,
    /// Unshifted test split; apply `shift` to obtain the target domain.
    pub test: Dataset,
    pub shift: ShiftSpec,
    pub lexicon: SynonymLexicon,
    pub vectors: WordVectorTable,
    pub rules: ParaphraseRuleSet,
}

fn pick<'a>(rng: &mut Rng, words: &[&'a str]) -> &'a str {
    words[rng.below(words.len())]
}

/// One draw from a rank-weighted distribution over `words`.
fn pick_ranked<'a>(rng: &mut Rng, words: &[&'a str], exponent: f64) -> &'a str {
    let weights: Vec<f64> = (1..=words.len()).map(|r| (r as f64).powf(-exponent)).collect();
    let mut u = rng.unit() * weights.iter().sum::<f64>();
    for (w, weight) in words.iter().zip(&weights) {
        if u < *weight {
            return w;
        }
        u -= weight;
    }
    words[words.len() - 1]
}

fn polarity_words(label: usize) -> &'static [&'static str] {
    if label == 1 {
        &POSITIVE_WORDS
    } else {
        &NEGATIVE_WORDS
    }
}

fn make_record(rng: &mut Rng, cfg: &SynthConfig, biased: bool) -> Record {
    let n_groups = match rng.below(10) {
        0..=3 => 0,
        4..=7 => 1,
        _ => 2,
    };
    let mut groups = BTreeSet::new();
    while groups.len() < n_groups {
        groups.insert(rng.below(GROUP_WORDS.len()));
    }
    let mut label = rng.below(2);
    if biased {
        for &(g, favoured, p) in &cfg.spurious_groups {
            if groups.contains(&g) {
                label = if rng.bernoulli(p) { favoured } else { 1 - favoured };
            }
        }
    }
    let mut words: Vec<&str> = Vec::new();
    let (lo, hi) = cfg.polarity_words;
    for _ in 0..lo + rng.below(hi.saturating_sub(lo) + 1) {
        words.push(pick_ranked(rng, polarity_words(label), cfg.zipf_exponent));
    }
    if rng.bernoulli(cfg.distractor_rate) {
        let pool = polarity_words(1 - label);
        let first = if cfg.mild_distractors {
            cfg.shifted_per_class.min(pool.len() - 1)
        } else {
            0
        };
        words.push(pick_ranked(rng, &pool[first..], cfg.zipf_exponent));
    }
    for &g in &groups {
        words.push(GROUP_WORDS[g][rng.below(2)]);
    }
    let (lo, hi) = cfg.filler_words;
    for _ in 0..lo + rng.below(hi.saturating_sub(lo) + 1) {
        words.push(pick(rng, &FILLER_WORDS));
    }
    rng.shuffle(&mut words);
    let mut text = words.join(" ");
    if let Some(first) = text.get(0..1) {
        text.replace_range(0..1, &first.to_uppercase());
    }
    text.push('.');
    Record { text, label, groups }
}

fn make_split(rng: &mut Rng, cfg: &SynthConfig, n: usize, biased: bool) -> Result<Dataset> {
    let records = (0..n).map(|_| make_record(rng, cfg, biased)).collect();
    Dataset::new(records, 2, GROUP_WORDS.len())
}

fn polar_all() -> impl Iterator<Item = &'static str> {
    POSITIVE_WORDS.iter().chain(NEGATIVE_WORDS.iter()).copied()
}

/// The most frequent `per_class` words of each polarity.
fn shifted_words(per_class: usize) -> impl Iterator<Item = &'static str> {
    let n = per_class.min(POSITIVE_WORDS.len());
    POSITIVE_WORDS[..n].iter().chain(NEGATIVE_WORDS[..n].iter()).copied()
}

/// Chooses a `fraction` of the shifted words (by deterministic shuffle).
fn subset(rng: &mut Rng, cfg: &SynthConfig, fraction: f64) -> BTreeSet<&'static str> {
    let mut all: Vec<&str> = shifted_words(cfg.shifted_per_class).collect();
    rng.shuffle(&mut all);
    let k = (fraction * all.len() as f64).round() as usize;
    all.into_iter().take(k).collect()
}

fn build_lexicon(
    rng: &mut Rng,
    cfg: &SynthConfig,
    restorable: &BTreeSet<&str>,
) -> Result<SynonymLexicon> {
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for label in [0, 1] {
        let pool = polarity_words(label);
        let opposite = polarity_words(1 - label);
        for &w in pool {
            let mut syns: Vec<String> = Vec::new();
            while syns.len() < 2 {
                let s = pick(rng, pool);
                if s != w && !syns.iter().any(|x| x == s) {
                    syns.push(s.to_string());
                }
            }
            while syns.len() < 2 + cfg.lexicon_antonyms.min(opposite.len()) {
                let s = pick(rng, opposite);
                if !syns.iter().any(|x| x == s) {
                    syns.push(s.to_string());
                }
            }
            entries.insert(w.to_string(), syns);
        }
    }
    for &w in restorable {
        entries.insert(leet(w), vec![w.to_string()]);
    }
    let pairs = [
        ("movie", "film"),
        ("film", "movie"),
        ("really", "truly"),
        ("quite", "rather"),
        ("very", "really"),
        ("story", "tale"),
        ("scenes", "moments"),
        ("honestly", "frankly"),
        ("seemed", "felt"),
    ];
    for (a, b) in pairs {
        entries.insert(a.to_string(), vec![b.to_string()]);
    }
    SynonymLexicon::new(entries)
}

fn build_vectors(
    rng: &mut Rng,
    cfg: &SynthConfig,
    restorable: &BTreeSet<&str>,
) -> Result<WordVectorTable> {
    let k = cfg.vector_width.max(3);
    let mut words: Vec<String> = Vec::new();
    let mut vectors: Vec<f64> = Vec::new();
    let noise = |rng: &mut Rng, n: usize, scale: f64| -> Vec<f64> {
        (0..n).map(|_| (2.0 * rng.unit() - 1.0) * scale).collect()
    };
    let mut polar: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for label in [1usize, 0] {
        let sign = if label == 1 { 1.0 } else { -1.0 };
        for &w in polarity_words(label) {
            let mut v = vec![cfg.sentiment_axis, sign * cfg.polarity_axis, 0.0];
            v.extend(noise(rng, k - 3, cfg.vector_noise));
            polar.insert(w, v.clone());
            words.push(w.to_string());
            vectors.extend(v);
        }
    }
    // Every shifted spelling has a vector, but only the restorable ones sit
    // next to their source word. Of the rest, a share sits next to an
    // arbitrary polarity word and the remainder among the neutral words.
    for w in shifted_words(cfg.shifted_per_class) {
        let v: Vec<f64> = if restorable.contains(w) {
            let jitter = noise(rng, k, 0.15);
            polar[w].iter().zip(jitter).map(|(b, j)| b + j).collect()
        } else if rng.bernoulli(cfg.decoy_fraction) {
            let all: Vec<&str> = polar_all().collect();
            let decoy = pick(rng, &all);
            let jitter = noise(rng, k, 0.15);
            polar[decoy].iter().zip(jitter).map(|(b, j)| b + j).collect()
        } else {
            let mut v = vec![0.0, 0.0, 1.0];
            v.extend(noise(rng, k - 3, 0.6));
            v
        };
        words.push(leet(w));
        vectors.extend(v);
    }
    let neutral = FILLER_WORDS
        .iter()
        .chain(GROUP_WORDS.iter().flatten())
        .copied();
    for w in neutral {
        let mut v = vec![0.0, 0.0, 1.0];
        v.extend(noise(rng, k - 3, 0.6));
        words.push(w.to_string());
        vectors.extend(v);
    }
    WordVectorTable::new(words, vectors, k)
}

fn build_rules() -> Result<ParaphraseRuleSet> {
    let w = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let rules = [
        ("the movie", "this film"),
        ("the film", "the movie"),
        ("it was", "it's"),
        ("was", "is"),
        ("is", "was"),
        ("really", ""),
        ("very", "quite"),
        ("honestly", ""),
        ("a", "one"),
        ("seemed", "felt"),
        ("that", "this"),
    ]
    .into_iter()
    .map(|(p, r)| RewriteRule {
        pattern: w(p),
        replacement: w(r),
    })
    .collect();
    ParaphraseRuleSet::new(rules)
}

/// Builds every split and resource from `cfg`; a pure function of the config.
pub fn generate(cfg: &SynthConfig) -> Result<SynthFixture> {
    let mut rng = Rng::new(cfg.seed);
    let train = make_split(&mut rng, cfg, cfg.train_size, true)?;
    let calibration = make_split(&mut rng, cfg, cfg.calibration_size, true)?;
    let test = make_split(&mut rng, cfg, cfg.test_size, false)?;
    let lex_restore = subset(&mut rng, cfg, cfg.lexicon_restore_fraction);
    let vec_restore = subset(&mut rng, cfg, cfg.vector_restore_fraction);
    let lexicon = build_lexicon(&mut rng, cfg, &lex_restore)?;
    let vectors = build_vectors(&mut rng, cfg, &vec_restore)?;
    let rules = build_rules()?;
    let shift = ShiftSpec {
        substitution_map: shifted_words(cfg.shifted_per_class)
            .map(|w| (w.to_string(), leet(w)))
            .collect(),
        substitution_coverage: cfg.shift_coverage,
        noise_rate: cfg.shift_noise,
        seed: cfg.shift_seed,
    };
    shift.validate()?;
    Ok(SynthFixture {
        train,
        calibration,
        test,
        shift,
        lexicon,
        vectors,
        rules,
    })
}
