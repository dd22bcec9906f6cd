//! The shipped benchmark: a fixture directory holding data splits,
//! augmentation resources and the settings every method runs with.
//!
//! ```text
//! fixture/
//!   train.jsonl  calibration.jsonl  test.jsonl  shifted_test.jsonl
//!   shift.json   lexicon.tsv        vectors.txt rules.tsv
//!   settings.json
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapt::{AdaptConfig, AdaptMode};
use crate::augment::{AugmenterSet, ParaphraseRuleSet, SynonymLexicon, WordVectorTable};
use crate::data::synth::{generate, SynthConfig};
use crate::data::{
    apply_shift, load_dataset, load_shift_spec, render_shift_spec, save_dataset, Dataset, ShiftSpec,
};
use crate::error::{parse_err, Result};
use crate::experiment::{train_checkpoint, Benchmark, SourceConfig};
use crate::model::{Checkpoint, OptimizerKind, TrainConfig};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const CALIBRATION_FILE: &str = "calibration.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const SHIFTED_FILE: &str = "shifted_test.jsonl";
pub const SHIFT_FILE: &str = "shift.json";
pub const LEXICON_FILE: &str = "lexicon.tsv";
pub const VECTORS_FILE: &str = "vectors.txt";
pub const RULES_FILE: &str = "rules.tsv";
pub const SETTINGS_FILE: &str = "settings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSettings {
    pub replacement_rate: f64,
    pub neighbor_count: usize,
}

/// Everything besides the data needed to rerun the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub source: SourceConfig,
    pub augment: AugmentSettings,
    pub episodic: AdaptConfig,
    pub continual: AdaptConfig,
    pub tta_num_aug: usize,
    pub weight_eta: f64,
    pub weight_epochs: usize,
    pub seeds: Vec<u64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            source: SourceConfig {
                dim: 16,
                init_scale: 0.1,
                init_seed: 7,
                train: TrainConfig::default(),
            },
            augment: AugmentSettings {
                replacement_rate: 1.0,
                neighbor_count: 3,
            },
            episodic: AdaptConfig {
                eta: 2.0,
                steps_per_sample: 3,
                mode: AdaptMode::Episodic,
                smf_enabled: false,
                max_attempts: 50,
                optimizer: OptimizerKind::Sgd,
                ..AdaptConfig::default()
            },
            continual: AdaptConfig {
                eta: 0.02,
                steps_per_sample: 1,
                mode: AdaptMode::Continual,
                smf_enabled: true,
                max_attempts: 50,
                optimizer: OptimizerKind::Sgd,
                ..AdaptConfig::default()
            },
            tta_num_aug: 20,
            weight_eta: 0.05,
            weight_epochs: 200,
            seeds: (0..5).collect(),
        }
    }
}

/// Generator settings for the shipped fixture.
pub fn synth_config() -> SynthConfig {
    SynthConfig {
        polarity_words: (1, 4),
        filler_words: (0, 2),
        zipf_exponent: 0.7,
        shifted_per_class: 4,
        mild_distractors: true,
        distractor_rate: 0.1,
        spurious_groups: vec![(2, 0, 0.95), (5, 1, 0.95)],
        shift_coverage: 0.9,
        shift_noise: 0.0,
        lexicon_restore_fraction: 0.5,
        lexicon_antonyms: 3,
        vector_restore_fraction: 0.0,
        decoy_fraction: 1.0,
        sentiment_axis: 3.0,
        polarity_axis: 0.5,
        ..SynthConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub train: Dataset,
    pub calibration: Dataset,
    pub test: Dataset,
    /// `test` after the shift; the stream every method is scored on.
    pub shifted: Dataset,
    pub shift: ShiftSpec,
    pub lexicon: SynonymLexicon,
    pub vectors: WordVectorTable,
    pub rules: ParaphraseRuleSet,
    pub settings: Settings,
}

impl Fixture {
    /// Builds the fixture from generator and benchmark settings.
    pub fn generate(cfg: &SynthConfig, settings: Settings) -> Result<Self> {
        let fx = generate(cfg)?;
        let shifted = apply_shift(&fx.test, &fx.shift)?;
        Ok(Self {
            train: fx.train,
            calibration: fx.calibration,
            test: fx.test,
            shifted,
            shift: fx.shift,
            lexicon: fx.lexicon,
            vectors: fx.vectors,
            rules: fx.rules,
            settings,
        })
    }

    /// The shipped benchmark, regenerated from scratch.
    pub fn standard() -> Result<Self> {
        Self::generate(&synth_config(), Settings::default())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let settings_text = std::fs::read_to_string(dir.join(SETTINGS_FILE))?;
        let settings = serde_json::from_str(&settings_text).map_err(|e| parse_err(e.line(), e.to_string()))?;
        Ok(Self {
            train: load_dataset(&dir.join(TRAIN_FILE))?,
            calibration: load_dataset(&dir.join(CALIBRATION_FILE))?,
            test: load_dataset(&dir.join(TEST_FILE))?,
            shifted: load_dataset(&dir.join(SHIFTED_FILE))?,
            shift: load_shift_spec(&dir.join(SHIFT_FILE))?,
            lexicon: SynonymLexicon::load(&dir.join(LEXICON_FILE))?,
            vectors: WordVectorTable::load(&dir.join(VECTORS_FILE))?,
            rules: ParaphraseRuleSet::load(&dir.join(RULES_FILE))?,
            settings,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        save_dataset(&dir.join(TRAIN_FILE), &self.train)?;
        save_dataset(&dir.join(CALIBRATION_FILE), &self.calibration)?;
        save_dataset(&dir.join(TEST_FILE), &self.test)?;
        save_dataset(&dir.join(SHIFTED_FILE), &self.shifted)?;
        std::fs::write(dir.join(SHIFT_FILE), render_shift_spec(&self.shift))?;
        std::fs::write(dir.join(LEXICON_FILE), self.lexicon.render())?;
        std::fs::write(dir.join(VECTORS_FILE), self.vectors.render())?;
        std::fs::write(dir.join(RULES_FILE), self.rules.render())?;
        let mut settings = serde_json::to_string_pretty(&self.settings).expect("settings serialize");
        settings.push('\n');
        std::fs::write(dir.join(SETTINGS_FILE), settings)?;
        Ok(())
    }

    pub fn augmenters(&self) -> Result<AugmenterSet> {
        AugmenterSet::builder()
            .lexicon(self.lexicon.clone())
            .vectors(self.vectors.clone())
            .rules(self.rules.clone())
            .replacement_rate(self.settings.augment.replacement_rate)
            .neighbor_count(self.settings.augment.neighbor_count)
            .build()
    }

    pub fn train_checkpoint(&self, set: &AugmenterSet) -> Result<Checkpoint> {
        train_checkpoint(&self.train, set, &self.settings.source)
    }

    /// Wires the fixture, a trained checkpoint and the augmenters into a
    /// benchmark over the shifted stream.
    pub fn benchmark<'a>(&'a self, checkpoint: &'a Checkpoint, set: &'a AugmenterSet) -> Benchmark<'a> {
        Benchmark {
            checkpoint,
            target: &self.shifted,
            calibration: Some(&self.calibration),
            augmenters: set,
            episodic: self.settings.episodic.clone(),
            continual: self.settings.continual.clone(),
            tta_num_aug: self.settings.tta_num_aug,
            weight_eta: self.settings.weight_eta,
            weight_epochs: self.settings.weight_epochs,
        }
    }
}
