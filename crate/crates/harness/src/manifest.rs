//! What a run was made from and how far it got.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const CODE_VERSION: &str = concat!("btlab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StageStatus {
    Done,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    #[serde(flatten)]
    pub status: StageStatus,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub seed: u64,
    pub data_seed: u64,
    pub corpus_sha256: BTreeMap<String, String>,
    pub tokenizer_sha256: Option<String>,
    pub code_version: String,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageRecord>,
    pub failed_stage: Option<String>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> RunManifest {
        RunManifest {
            seed: config.train.seed,
            data_seed: config.data.seed,
            config: config.clone(),
            corpus_sha256: BTreeMap::new(),
            tokenizer_sha256: None,
            code_version: CODE_VERSION.to_string(),
            wall_clock_seconds: 0.0,
            stages: Vec::new(),
            failed_stage: None,
        }
    }

    /// Everything except timing, for comparing two runs.
    pub fn reproducibility_key(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "corpus_sha256": self.corpus_sha256,
            "tokenizer_sha256": self.tokenizer_sha256,
            "code_version": self.code_version,
        })
    }
}
