use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use reasonsynth_core::pipeline::{
    generate_corpus, preset, AmbiguityPolicy, Amount, CorpusConfig, CurriculumStage, GeneratorConfig, OutputFormat,
    DEFAULT_TOKEN_BUDGET, MANIFEST_FILE,
};
use reasonsynth_core::TaskKind;
use serde::Deserialize;

use crate::{config_error, parse_enum, parse_task, read_json};

/// Flags of `gen`. A `--config` file holds the same keys in snake_case;
/// flags given on the command line win.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenArgs {
    /// Task to generate, or `mix` for a uniform deduct/abduct/induct mix.
    #[arg(long, value_parser = parse_task)]
    pub task: Option<TaskKind>,
    /// Symbol vocabulary size S (default 100).
    #[arg(long)]
    pub vocab_size: Option<u32>,
    /// Number of examples.
    #[arg(long, conflicts_with = "token_budget")]
    pub n: Option<u64>,
    /// Total source plus target tokens to aim for.
    #[arg(long)]
    pub token_budget: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Work units per generation block. Never changes the output.
    #[arg(long)]
    pub shards: Option<usize>,
    /// Worker threads. Never changes the output.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// `text` (.src/.tgt) or `jsonl`.
    #[arg(long, value_parser = parse_enum::<OutputFormat>)]
    pub format: Option<OutputFormat>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// A preset name (`isarstep`) or a JSON file with a list of stages.
    #[arg(long)]
    pub curriculum: Option<String>,
    /// `keep`, `annotate` (store solution counts) or `unique_only`.
    #[arg(long, value_parser = parse_enum::<AmbiguityPolicy>)]
    pub ambiguity: Option<AmbiguityPolicy>,
    /// Longest source or target kept, in tokens.
    #[arg(long)]
    pub max_seq_len: Option<usize>,
    /// Stage name for single-task runs (defaults to the task name).
    #[arg(long)]
    pub stage_name: Option<String>,
    /// Examples probed to turn a token budget into an example count.
    #[arg(long)]
    pub probe: Option<u64>,
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl GenArgs {
    fn merged(self) -> Result<GenArgs> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let file: GenArgs = read_json(path)?;
        if self.n.is_some() || self.token_budget.is_some() {
            // an amount on the command line replaces the file's amount
            return Ok(GenArgs {
                n: self.n,
                token_budget: self.token_budget,
                ..self.overlay(file)
            });
        }
        Ok(self.overlay(file))
    }

    fn overlay(self, file: GenArgs) -> GenArgs {
        GenArgs {
            task: self.task.or(file.task),
            vocab_size: self.vocab_size.or(file.vocab_size),
            n: self.n.or(file.n),
            token_budget: self.token_budget.or(file.token_budget),
            seed: self.seed.or(file.seed),
            shards: self.shards.or(file.shards),
            jobs: self.jobs.or(file.jobs),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
            curriculum: self.curriculum.or(file.curriculum),
            ambiguity: self.ambiguity.or(file.ambiguity),
            max_seq_len: self.max_seq_len.or(file.max_seq_len),
            stage_name: self.stage_name.or(file.stage_name),
            probe: self.probe.or(file.probe),
            config: None,
        }
    }

    fn amount(&self) -> Result<Option<Amount>> {
        match (self.n, self.token_budget) {
            (Some(_), Some(_)) => Err(config_error("give --n or --token-budget, not both")),
            (Some(n), None) => Ok(Some(Amount::Examples(n))),
            (None, Some(t)) => Ok(Some(Amount::Tokens(t))),
            (None, None) => Ok(None),
        }
    }

    fn stages(&self) -> Result<Vec<CurriculumStage>> {
        let amount = self.amount()?;
        let mut stages = match &self.curriculum {
            Some(name) if preset(name, Amount::Examples(0)).is_ok() => {
                if self.task.is_some() {
                    return Err(config_error("--task cannot be combined with a curriculum preset"));
                }
                preset(name, amount.unwrap_or(Amount::Tokens(DEFAULT_TOKEN_BUDGET)))?
            }
            Some(file) => {
                if amount.is_some() || self.task.is_some() {
                    return Err(config_error("a curriculum file sets its own tasks and amounts"));
                }
                #[derive(Deserialize)]
                #[serde(untagged)]
                enum StagesFile {
                    List(Vec<CurriculumStage>),
                    Object { stages: Vec<CurriculumStage> },
                }
                match read_json::<StagesFile>(&PathBuf::from(file))? {
                    StagesFile::List(s) | StagesFile::Object { stages: s } => s,
                }
            }
            None => {
                let task = self.task.unwrap_or(TaskKind::Mix);
                let amount = amount.ok_or_else(|| config_error("give --n or --token-budget"))?;
                let name = self.stage_name.clone().unwrap_or_else(|| task.name().to_string());
                let mut stage = CurriculumStage::new(name, GeneratorConfig::default(), task, 0);
                (stage.n_examples, stage.token_budget) = match amount {
                    Amount::Examples(n) => (Some(n), None),
                    Amount::Tokens(t) => (None, Some(t)),
                };
                vec![stage]
            }
        };
        for stage in &mut stages {
            if let Some(v) = self.vocab_size {
                stage.config.symbols.vocab_size = v;
            }
            if let Some(m) = self.max_seq_len {
                stage.config.max_seq_len = m;
            }
        }
        Ok(stages)
    }
}

pub fn run(args: GenArgs) -> Result<()> {
    let args = args.merged()?;
    let out = args.out.clone().ok_or_else(|| config_error("--out is required"))?;
    let defaults = CorpusConfig::default();
    let config = CorpusConfig {
        seed: args.seed.unwrap_or(defaults.seed),
        stages: args.stages()?,
        shards: args.shards.unwrap_or(defaults.shards),
        format: args.format.unwrap_or(defaults.format),
        ambiguity: args.ambiguity.unwrap_or(defaults.ambiguity),
        probe: args.probe.unwrap_or(defaults.probe),
    };
    config.validate()?;
    if args.jobs == Some(0) {
        return Err(config_error("--jobs must be positive"));
    }
    let manifest = generate_corpus(&config, &out, args.jobs)?;
    for s in &manifest.stages {
        println!(
            "stage {}: {} examples, {} source + {} target tokens, {} duplicates dropped",
            s.stage.stage_name, s.n_examples, s.source_tokens, s.target_tokens, s.dedup_drops
        );
    }
    println!(
        "{} examples, manifest {}",
        manifest.n_examples(),
        out.join(MANIFEST_FILE).display()
    );
    Ok(())
}
