//! Run configuration. A profile supplies every value; a TOML file and then
//! `--set key=value` overrides are layered on top.

use std::fmt;
use std::str::FromStr;

use btlab_core::grammar::{parse_switches, GrammarConfig};
use btlab_core::lexicon::{FieldDistribution, FrequencyModel, LexiconSizes};
use btlab_nmt::embed_init::SkipGramConfig;
use btlab_nmt::model::ModelConfig;
use btlab_nmt::params::AdamConfig;
use btlab_nmt::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Size of corpora, model and training budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Reduced lexicon and model for test suites on one CPU core.
    Mini,
    #[default]
    Desk,
    Paper,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Mini => "mini",
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Profile> {
        match s {
            "mini" => Ok(Profile::Mini),
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Config(format!("unknown profile {s:?} (mini, desk, paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguagesConfig {
    /// Switch vector of language A, e.g. "000000".
    pub a: String,
    pub b: String,
    /// Both languages use the same lexicon (identity dictionary).
    pub shared_lexicon: bool,
    pub anchor_fraction: f64,
    pub frequency: FrequencyModel,
    pub fields: usize,
    pub field_distribution: FieldDistribution,
    pub lexicon: LexiconSizes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Seed of lexica, fields, dictionary and corpora.
    pub seed: u64,
    pub train_sentences: usize,
    pub valid_pairs: usize,
    pub test_pairs: usize,
    /// Gold parallel sentences for the supervised step.
    pub aligned_sentences: usize,
    /// Every dictionary surface pair as a one-word supervised example.
    pub dictionary_supervision: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenizerConfig {
    pub vocab_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub d_model: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub shared_enc: usize,
    pub shared_dec: usize,
    pub max_len: usize,
    pub dropout: f64,
}

impl ModelSection {
    pub fn resolve(&self, vocab_size: usize, lang_tokens: Vec<u32>) -> ModelConfig {
        ModelConfig {
            vocab_size,
            d_model: self.d_model,
            heads: self.heads,
            d_ff: self.d_ff,
            enc_layers: self.enc_layers,
            dec_layers: self.dec_layers,
            shared_enc: self.shared_enc,
            shared_dec: self.shared_dec,
            max_len: self.max_len,
            dropout: self.dropout,
            lang_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub roundtrip: bool,
    /// Word-by-word statistics on POS-correct sentences.
    pub word_stats: bool,
    pub context: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub profile: Profile,
    pub languages: LanguagesConfig,
    pub grammar: GrammarConfig,
    pub data: DataConfig,
    pub tokenizer: TokenizerConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    /// Identical languages with grammar 000000 at the given scale.
    pub fn for_profile(profile: Profile) -> RunConfig {
        let languages = LanguagesConfig {
            a: "000000".into(),
            b: "000000".into(),
            shared_lexicon: true,
            anchor_fraction: 0.0,
            frequency: FrequencyModel::Uniform,
            fields: 1,
            field_distribution: FieldDistribution::Balanced,
            lexicon: LexiconSizes::default(),
        };
        let eval = EvalConfig {
            roundtrip: true,
            word_stats: true,
            context: true,
        };
        let adam = AdamConfig::default();
        match profile {
            Profile::Paper => RunConfig {
                name: "run".into(),
                profile,
                languages,
                grammar: GrammarConfig::default(),
                data: DataConfig {
                    seed: 0,
                    train_sentences: 100_000,
                    valid_pairs: 10_000,
                    test_pairs: 10_000,
                    aligned_sentences: 0,
                    dictionary_supervision: false,
                },
                tokenizer: TokenizerConfig { vocab_size: 1000 },
                model: ModelSection {
                    d_model: 512,
                    heads: 8,
                    d_ff: 2048,
                    enc_layers: 4,
                    dec_layers: 4,
                    shared_enc: 3,
                    shared_dec: 3,
                    max_len: 256,
                    dropout: 0.1,
                },
                train: TrainConfig {
                    epochs: 40,
                    batch_size: 16,
                    adam,
                    ..TrainConfig::default()
                },
                eval,
            },
            Profile::Desk => RunConfig {
                name: "run".into(),
                profile,
                languages,
                grammar: GrammarConfig::default(),
                data: DataConfig {
                    seed: 0,
                    train_sentences: 20_000,
                    valid_pairs: 2_000,
                    test_pairs: 2_000,
                    aligned_sentences: 0,
                    dictionary_supervision: false,
                },
                tokenizer: TokenizerConfig { vocab_size: 1000 },
                model: ModelSection {
                    d_model: 128,
                    heads: 4,
                    d_ff: 256,
                    enc_layers: 4,
                    dec_layers: 4,
                    shared_enc: 3,
                    shared_dec: 3,
                    max_len: 256,
                    dropout: 0.1,
                },
                train: TrainConfig {
                    epochs: 20,
                    batch_size: 16,
                    adam: AdamConfig { lr: 5e-4, ..adam },
                    ..TrainConfig::default()
                },
                eval,
            },
            Profile::Mini => RunConfig {
                name: "run".into(),
                profile,
                languages: LanguagesConfig {
                    lexicon: LexiconSizes {
                        noun: 16,
                        adj: 8,
                        tverb: 8,
                        iverb: 8,
                        verb_comp: 6,
                        prep: 8,
                        subj: 1,
                        comp: 1,
                        rel: 1,
                    },
                    ..languages
                },
                grammar: GrammarConfig::default(),
                data: DataConfig {
                    seed: 0,
                    train_sentences: 4_000,
                    valid_pairs: 200,
                    test_pairs: 500,
                    aligned_sentences: 0,
                    dictionary_supervision: false,
                },
                tokenizer: TokenizerConfig { vocab_size: 1_000 },
                model: ModelSection {
                    d_model: 64,
                    heads: 4,
                    d_ff: 128,
                    enc_layers: 2,
                    dec_layers: 2,
                    shared_enc: 1,
                    shared_dec: 1,
                    max_len: 160,
                    dropout: 0.0,
                },
                train: TrainConfig {
                    epochs: 12,
                    batch_size: 16,
                    adam: AdamConfig { lr: 2e-3, ..adam },
                    embed_init: Some(SkipGramConfig::default()),
                    ..TrainConfig::default()
                },
                eval,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        parse_switches(&self.languages.a)?;
        parse_switches(&self.languages.b)?;
        self.languages.lexicon.validate()?;
        self.grammar.validate()?;
        self.languages.frequency.validate()?;
        if !(0.0..=1.0).contains(&self.languages.anchor_fraction) {
            return bad(format!("anchor fraction {} is not in [0, 1]", self.languages.anchor_fraction));
        }
        if self.languages.shared_lexicon && self.languages.anchor_fraction > 0.0 {
            return bad("anchor points need two lexica; unset shared_lexicon".into());
        }
        if self.languages.fields == 0 {
            return bad("at least one lexical field is required".into());
        }
        if self.data.train_sentences == 0 || self.data.valid_pairs == 0 || self.data.test_pairs == 0 {
            return bad("training, validation and test corpora must be non-empty".into());
        }
        let has_supervision = self.data.aligned_sentences > 0 || self.data.dictionary_supervision;
        if self.train.supervised && !has_supervision {
            return bad("train.supervised needs data.aligned_sentences or data.dictionary_supervision".into());
        }
        if has_supervision && !self.train.supervised {
            log::warn!("supervised resources are configured but train.supervised is off");
        }
        self.train.validate()?;
        self.model.resolve(self.tokenizer.vocab_size, vec![0, 1]).validate()?;
        Ok(())
    }

    /// Layers `toml_text` (if any) and then `overrides` (`a.b=value`) over
    /// `self`.
    pub fn layered(&self, toml_text: Option<&str>, overrides: &[String]) -> Result<RunConfig> {
        let mut table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(text) = toml_text {
            let file: toml::Table = toml::from_str(text)?;
            merge(&mut table, file);
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `path.to.key=value`; the value is read as a TOML literal and
/// falls back to a plain string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one item");
    let mut cur = table;
    for k in parents {
        cur = match cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())) {
            toml::Value::Table(t) => t,
            _ => return Err(Error::Config(format!("override {spec:?}: {k} is not a table"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
