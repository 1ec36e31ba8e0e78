use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BenchmarkItem, BuildOptions, CorpusError, GenParams, StrataConfig, TaskKind};
use crate::fsutil::write_json_atomic;

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

/// Generation settings echoed into every corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub params: GenParams,
    pub strata: StrataConfig,
    pub quota: usize,
    #[serde(default)]
    pub build: BuildOptions,
}

impl GenConfig {
    pub fn default_for(kind: TaskKind) -> Self {
        Self {
            params: GenParams::default_for(kind),
            strata: StrataConfig::default_for(kind),
            quota: 10,
            build: BuildOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        self.params.validate()?;
        self.strata.validate()?;
        if self.quota == 0 {
            return Err(CorpusError::Config("quota must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    pub schema_version: u32,
    pub task_kind: TaskKind,
    pub config: GenConfig,
    pub seed: u64,
    pub items: Vec<BenchmarkItem>,
}

impl Corpus {
    pub fn build(config: GenConfig, seed: u64) -> Result<Self, CorpusError> {
        config.validate()?;
        let items = super::build_benchmark(&config.params, &config.strata, config.quota, seed, &config.build)?;
        Ok(Self {
            schema_version: CORPUS_SCHEMA_VERSION,
            task_kind: config.params.kind(),
            config,
            seed,
            items,
        })
    }

    /// Hex SHA-256 of the canonical compact JSON encoding.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("corpus serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.schema_version != CORPUS_SCHEMA_VERSION {
            return Err(CorpusError::Schema(format!(
                "corpus schema version {} (expected {CORPUS_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.config.params.kind() != self.task_kind {
            return Err(CorpusError::Schema("config task does not match corpus task".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for item in &self.items {
            if item.task_kind != self.task_kind {
                return Err(CorpusError::Integrity(format!("{}: wrong task kind", item.item_id)));
            }
            if !ids.insert(item.item_id.as_str()) {
                return Err(CorpusError::Integrity(format!("duplicate item id {}", item.item_id)));
            }
            item.validate()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let bytes = std::fs::read(path)?;
        let corpus: Corpus = serde_json::from_slice(&bytes).map_err(|e| CorpusError::Schema(e.to_string()))?;
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        write_json_atomic(path, self)?;
        Ok(())
    }

    pub fn item(&self, id: &str) -> Option<&BenchmarkItem> {
        self.items.iter().find(|i| i.item_id == id)
    }
}
