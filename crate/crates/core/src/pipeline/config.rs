use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{CodecOptions, TaskKind};
use crate::error::{Error, Result};
use crate::oracle::OracleBounds;
use crate::rewrite::RewriteConfig;
use crate::symbols::SymbolSpaceConfig;

pub const DEFAULT_MAX_SEQ_LEN: usize = 128;

/// Token budget of the default curriculum: 20k updates, 4 accumulated
/// batches of 4096 tokens each.
pub const DEFAULT_TOKEN_BUDGET: u64 = 20_000 * 4 * 4096;

/// Everything that shapes a single example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub symbols: SymbolSpaceConfig,
    pub rewrite: RewriteConfig,
    pub codec: CodecOptions,
    /// Longer sources or targets are regenerated.
    pub max_seq_len: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            symbols: SymbolSpaceConfig::default(),
            rewrite: RewriteConfig::default(),
            codec: CodecOptions::default(),
            max_seq_len: DEFAULT_MAX_SEQ_LEN,
        }
    }
}

impl GeneratorConfig {
    pub fn with_vocab_size(vocab_size: u32) -> Self {
        GeneratorConfig {
            symbols: SymbolSpaceConfig::with_vocab_size(vocab_size),
            ..Default::default()
        }
    }

    /// Checks the config can produce every task in `tasks`.
    pub fn validate(&self, tasks: impl IntoIterator<Item = TaskKind>) -> Result<()> {
        let tasks: Vec<TaskKind> = tasks.into_iter().collect();
        let rewriting = tasks.iter().any(|t| t.uses_string_class());
        self.symbols.validate_for(rewriting)?;
        if rewriting {
            self.rewrite.validate(&self.symbols)?;
        }
        if self.max_seq_len == 0 {
            return Err(Error::config("max_seq_len must be positive"));
        }
        Ok(())
    }

    pub fn bounds(&self) -> OracleBounds {
        OracleBounds::from_configs(&self.symbols, &self.rewrite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityPolicy {
    #[default]
    Keep,
    /// Store the oracle's solution count with each example.
    Annotate,
    /// Regenerate examples whose target is not the only solution.
    UniqueOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Text,
    Jsonl,
}

/// One contiguous segment of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumStage {
    pub stage_name: String,
    #[serde(default)]
    pub config: GeneratorConfig,
    pub task_weights: BTreeMap<TaskKind, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_examples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_budget: Option<u64>,
}

impl CurriculumStage {
    pub fn new(stage_name: impl Into<String>, config: GeneratorConfig, task: TaskKind, n_examples: u64) -> Self {
        CurriculumStage {
            stage_name: stage_name.into(),
            config,
            task_weights: BTreeMap::from([(task, 1.0)]),
            n_examples: Some(n_examples),
            token_budget: None,
        }
    }

    /// Weights over concrete tasks, with `mix` spread evenly over its three
    /// tasks, in a fixed order.
    pub fn effective_weights(&self) -> Vec<(TaskKind, f64)> {
        let mut acc: BTreeMap<TaskKind, f64> = BTreeMap::new();
        for (&task, &w) in &self.task_weights {
            if task == TaskKind::Mix {
                for t in TaskKind::MIX {
                    *acc.entry(t).or_default() += w / TaskKind::MIX.len() as f64;
                }
            } else {
                *acc.entry(task).or_default() += w;
            }
        }
        acc.into_iter().filter(|&(_, w)| w > 0.0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Error::config(format!("stage {:?}: {msg}", self.stage_name));
        if self.stage_name.is_empty()
            || !self
                .stage_name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
            || self.stage_name.starts_with('.')
        {
            return Err(bad("names may use ASCII letters, digits, '_', '-' and '.'"));
        }
        if self.task_weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(bad("task weights must be finite and nonnegative"));
        }
        if self.effective_weights().is_empty() {
            return Err(bad("task weights must sum to a positive value"));
        }
        if self.n_examples.is_some() == self.token_budget.is_some() {
            return Err(bad("set exactly one of n_examples and token_budget"));
        }
        self.config
            .validate(self.effective_weights().into_iter().map(|(t, _)| t))
            .map_err(|e| bad(&e.to_string()))
    }
}

/// A full generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub seed: u64,
    pub stages: Vec<CurriculumStage>,
    /// Work units per generation block; never changes the output.
    pub shards: usize,
    pub format: OutputFormat,
    pub ambiguity: AmbiguityPolicy,
    /// Examples measured to turn a token budget into an example count.
    pub probe: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 0,
            stages: Vec::new(),
            shards: 1,
            format: OutputFormat::Text,
            ambiguity: AmbiguityPolicy::Keep,
            probe: 10_000,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::config("a corpus needs at least one stage"));
        }
        if self.shards == 0 {
            return Err(Error::config("shards must be positive"));
        }
        for (i, s) in self.stages.iter().enumerate() {
            s.validate()?;
            if self.stages[..i].iter().any(|o| o.stage_name == s.stage_name) {
                return Err(Error::config(format!("duplicate stage name {:?}", s.stage_name)));
            }
        }
        if self.probe == 0 && self.stages.iter().any(|s| s.token_budget.is_some()) {
            return Err(Error::config("token budgets need a positive probe size"));
        }
        Ok(())
    }
}

/// How much a stage or preset generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Amount {
    Examples(u64),
    Tokens(u64),
}

impl Amount {
    fn halves(self) -> [Amount; 2] {
        match self {
            Amount::Examples(n) => [Amount::Examples(n / 2), Amount::Examples(n - n / 2)],
            Amount::Tokens(n) => [Amount::Tokens(n / 2), Amount::Tokens(n - n / 2)],
        }
    }

    pub(crate) fn apply(self, stage: &mut CurriculumStage) {
        (stage.n_examples, stage.token_budget) = match self {
            Amount::Examples(n) => (Some(n), None),
            Amount::Tokens(n) => (None, Some(n)),
        };
    }
}

/// Two Mix stages: vocabulary 100 for the first half of `amount`, then
/// vocabulary 1000 for the rest.
pub fn isarstep_curriculum(amount: Amount) -> Vec<CurriculumStage> {
    [("s100", 100u32), ("s1000", 1000)]
        .into_iter()
        .zip(amount.halves())
        .map(|((name, vocab), part)| {
            let mut stage = CurriculumStage::new(name, GeneratorConfig::with_vocab_size(vocab), TaskKind::Mix, 0);
            part.apply(&mut stage);
            stage
        })
        .collect()
}

pub fn preset(name: &str, amount: Amount) -> Result<Vec<CurriculumStage>> {
    match name {
        "isarstep" => Ok(isarstep_curriculum(amount)),
        _ => Err(Error::config(format!("unknown curriculum preset {name:?}"))),
    }
}
