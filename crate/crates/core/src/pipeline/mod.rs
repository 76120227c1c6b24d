//! Corpus assembly: curriculum stages, sharded deterministic generation,
//! deduplication, writers, manifests, splits and statistics.

pub mod config;
pub mod generate;
pub mod manifest;
pub mod record;
pub mod split;
pub mod stats;

pub use config::{
    isarstep_curriculum, preset, AmbiguityPolicy, Amount, CorpusConfig, CurriculumStage, GeneratorConfig, OutputFormat,
    DEFAULT_MAX_SEQ_LEN, DEFAULT_TOKEN_BUDGET,
};
pub use generate::{generate_corpus, generate_input, generate_records, generate_stage, plan_token_budget, StagePlan};
pub use manifest::{CorpusManifest, StageReport, MANIFEST_FILE};
pub use record::{read_corpus, ExampleRecord, JsonRecord, LoadedCorpus, LoadedExample, Meta};
pub use split::{split_corpus, split_examples, Partition, SplitFractions};
pub use stats::{corpus_stats, FidelityReport, StatsReport};
