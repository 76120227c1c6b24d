use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{AmbiguityPolicy, CorpusConfig, CurriculumStage, OutputFormat};
use super::record::FileDigest;
use crate::codec::TaskKind;
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    /// The stage as configured.
    pub stage: CurriculumStage,
    /// Example count derived from a token budget, when one was set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planned_examples: Option<u64>,
    pub first_global_index: u64,
    pub n_examples: u64,
    /// Generation indices consumed, including dropped duplicates.
    pub indices_used: u64,
    pub dedup_drops: u64,
    /// Regenerations for over-length or ambiguous examples.
    pub resamples: u64,
    pub source_tokens: u64,
    pub target_tokens: u64,
    pub task_counts: BTreeMap<TaskKind, u64>,
    /// Solution counts (`">=cap"` when truncated), when annotated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity_histogram: Option<BTreeMap<String, u64>>,
    pub files: Vec<FileDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: u32,
    pub master_seed: u64,
    pub shard_count: usize,
    pub format: OutputFormat,
    pub ambiguity: AmbiguityPolicy,
    pub probe: u64,
    pub stages: Vec<StageReport>,
}

impl CorpusManifest {
    pub fn new(config: &CorpusConfig) -> Self {
        CorpusManifest {
            version: MANIFEST_VERSION,
            master_seed: config.seed,
            shard_count: config.shards,
            format: config.format,
            ambiguity: config.ambiguity,
            probe: config.probe,
            stages: Vec::new(),
        }
    }

    /// The configuration that reproduces this corpus.
    pub fn config(&self) -> CorpusConfig {
        CorpusConfig {
            seed: self.master_seed,
            stages: self.stages.iter().map(|s| s.stage.clone()).collect(),
            shards: self.shard_count,
            format: self.format,
            ambiguity: self.ambiguity,
            probe: self.probe,
        }
    }

    pub fn n_examples(&self) -> u64 {
        self.stages.iter().map(|s| s.n_examples).sum()
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage.stage_name == name)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
