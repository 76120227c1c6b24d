use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;
use rayon::prelude::*;

use super::config::{AmbiguityPolicy, CorpusConfig, CurriculumStage, GeneratorConfig};
use super::manifest::{CorpusManifest, StageReport, MANIFEST_FILE};
use super::record::{fingerprint, ExampleRecord, RecordWriter};
use crate::codec::{encode_example, ExampleInput, InductPair, SeqPair, TaskKind};
use crate::error::{Error, Result};
use crate::oracle::{verify_example, OracleBounds};
use crate::rewrite::generate_rewrite;
use crate::symbols::{derive_rng, derive_rng_at, LenRange};
use crate::term::{apply_substitution, generate_triple, sample_substitution, MAX_RESAMPLE_ATTEMPTS};

/// Indices generated per round before deduplication.
const BLOCK: u64 = 4096;

/// Draws the content a `task` example is encoded from.
pub fn generate_input<R: RngCore + ?Sized>(task: TaskKind, cfg: &GeneratorConfig, rng: &mut R) -> Result<ExampleInput> {
    let single = LenRange { min: 1, max: 1 };
    Ok(match task {
        TaskKind::Deduct | TaskKind::Abduct | TaskKind::Induct | TaskKind::InductV2 => {
            ExampleInput::Triple(generate_triple(&cfg.symbols, rng)?)
        }
        TaskKind::InductV3 => {
            let triple = generate_triple(&cfg.symbols, rng)?;
            let second_case = sample_substitution(&triple.rule, &triple.split, &cfg.symbols, rng);
            let second_result = apply_substitution(&triple.split, &triple.rule, &second_case)?.into();
            ExampleInput::TriplePair(InductPair {
                triple,
                second_case,
                second_result,
            })
        }
        TaskKind::Rewrite | TaskKind::InductRewrite => {
            ExampleInput::Rewrite(generate_rewrite(&cfg.symbols, &cfg.rewrite, rng, single)?)
        }
        TaskKind::RewriteMultistep => ExampleInput::Rewrite(generate_rewrite(
            &cfg.symbols,
            &cfg.rewrite,
            rng,
            cfg.rewrite.steps_range,
        )?),
        TaskKind::Mix => return Err(Error::config("mix is a sampling directive, not a task")),
    })
}

/// A stage prepared for generation.
pub struct StagePlan<'a> {
    pub stage: &'a CurriculumStage,
    tasks: Vec<TaskKind>,
    dist: WeightedIndex<f64>,
    bounds: OracleBounds,
    task_label: String,
    example_label: String,
    policy: AmbiguityPolicy,
    seed: u64,
}

/// One accepted example before it gets a corpus position.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub index: u64,
    pub retry: u64,
    pub pair: SeqPair,
    pub n_solutions: Option<usize>,
    pub truncated: Option<bool>,
    pub fingerprint: u128,
}

impl<'a> StagePlan<'a> {
    pub fn new(stage: &'a CurriculumStage, seed: u64, policy: AmbiguityPolicy) -> Result<Self> {
        stage.validate()?;
        let (tasks, weights): (Vec<TaskKind>, Vec<f64>) = stage.effective_weights().into_iter().unzip();
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::config(format!("task weights: {e}")))?;
        Ok(StagePlan {
            stage,
            tasks,
            dist,
            bounds: stage.config.bounds(),
            task_label: format!("{}/task", stage.stage_name),
            example_label: format!("{}/example", stage.stage_name),
            policy,
            seed,
        })
    }

    /// The task at `index`, drawn once so regenerations keep the mix intact.
    pub fn task_at(&self, index: u64) -> TaskKind {
        if self.tasks.len() == 1 {
            return self.tasks[0];
        }
        self.tasks[self.dist.sample(&mut derive_rng(self.seed, &self.task_label, index))]
    }

    /// Generates the example at `index`, regenerating with a bumped retry
    /// coordinate while it is too long or, under `unique_only`, ambiguous.
    pub fn candidate(&self, index: u64) -> Result<Candidate> {
        let task = self.task_at(index);
        let cfg = &self.stage.config;
        for retry in 0..MAX_RESAMPLE_ATTEMPTS as u64 {
            let mut rng = derive_rng_at(self.seed, &self.example_label, index, retry);
            let input = generate_input(task, cfg, &mut rng)?;
            let pair = encode_example(&input, task, &cfg.codec)?;
            if pair.source.len() > cfg.max_seq_len || pair.target.len() > cfg.max_seq_len {
                continue;
            }
            let (mut n_solutions, mut truncated) = (None, None);
            if self.policy != AmbiguityPolicy::Keep {
                let report = verify_example(&pair, &self.bounds)?;
                if self.policy == AmbiguityPolicy::UniqueOnly && !report.unique() {
                    continue;
                }
                n_solutions = Some(report.n_solutions);
                truncated = Some(report.truncated);
            }
            let fingerprint = fingerprint(&pair.source, &pair.target);
            return Ok(Candidate {
                index,
                retry,
                pair,
                n_solutions,
                truncated,
                fingerprint,
            });
        }
        Err(Error::Generation(format!(
            "stage {:?} index {index}: no acceptable {task} example after {MAX_RESAMPLE_ATTEMPTS} attempts",
            self.stage.stage_name
        )))
    }

    /// Candidates for `range`, split into `shards` contiguous work units.
    fn candidates(&self, range: std::ops::Range<u64>, shards: usize) -> Result<Vec<Candidate>> {
        let len = range.end - range.start;
        let per = len.div_ceil(shards.max(1) as u64).max(1);
        let pieces: Vec<std::ops::Range<u64>> = (0..shards as u64)
            .map(|s| (range.start + s * per).min(range.end)..(range.start + (s + 1) * per).min(range.end))
            .filter(|r| !r.is_empty())
            .collect();
        let parts: Vec<Vec<Result<Candidate>>> = pieces
            .into_par_iter()
            .map(|r| r.map(|i| self.candidate(i)).collect())
            .collect();
        parts.into_iter().flatten().collect()
    }

    /// Example count for the stage: `n_examples`, or the token budget over
    /// the mean length of the first `probe` candidates.
    pub fn planned_examples(&self, probe: u64, shards: usize) -> Result<u64> {
        match (self.stage.n_examples, self.stage.token_budget) {
            (Some(n), _) => Ok(n),
            (None, Some(0)) => Ok(0),
            (None, Some(budget)) => {
                let sample = self.candidates(0..probe.max(1), shards)?;
                let tokens: u64 = sample
                    .iter()
                    .map(|c| (c.pair.source.len() + c.pair.target.len()) as u64)
                    .sum();
                Ok((budget as f64 * sample.len() as f64 / tokens as f64).ceil() as u64)
            }
            (None, None) => Err(Error::config("stage has neither n_examples nor token_budget")),
        }
    }
}

/// Token-budget planning for a single stage.
pub fn plan_token_budget(stage: &CurriculumStage, seed: u64, avg_probe: u64) -> Result<u64> {
    StagePlan::new(stage, seed, AmbiguityPolicy::Keep)?.planned_examples(avg_probe, rayon::current_num_threads())
}

/// Counters for one generated stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageCounts {
    pub n_examples: u64,
    pub indices_used: u64,
    pub dedup_drops: u64,
    pub resamples: u64,
    pub source_tokens: u64,
    pub target_tokens: u64,
    pub task_counts: BTreeMap<TaskKind, u64>,
    pub ambiguity: BTreeMap<String, u64>,
}

/// Generates `n` deduplicated examples of a stage in canonical order and
/// hands each to `emit`. The output does not depend on `shards` or on the
/// number of worker threads.
pub fn generate_stage(
    plan: &StagePlan<'_>,
    n: u64,
    first_global_index: u64,
    shards: usize,
    emit: &mut dyn FnMut(ExampleRecord) -> Result<()>,
) -> Result<StageCounts> {
    let mut counts = StageCounts::default();
    let mut seen: HashSet<u128> = HashSet::new();
    let limit = n.saturating_mul(4).saturating_add(10_000);
    while counts.n_examples < n {
        if counts.indices_used >= limit {
            return Err(Error::Generation(format!(
                "stage {:?}: too many duplicates ({} dropped for {} kept)",
                plan.stage.stage_name, counts.dedup_drops, counts.n_examples
            )));
        }
        let block = (n - counts.n_examples).clamp(1, BLOCK);
        let start = counts.indices_used;
        let candidates = plan.candidates(start..start + block, shards)?;
        counts.indices_used += block;
        for c in candidates {
            if counts.n_examples == n {
                // later indices of the block stay unused
                counts.indices_used = c.index;
                break;
            }
            if !seen.insert(c.fingerprint) {
                counts.dedup_drops += 1;
                continue;
            }
            counts.resamples += c.retry;
            counts.source_tokens += c.pair.source.len() as u64;
            counts.target_tokens += c.pair.target.len() as u64;
            *counts.task_counts.entry(c.pair.task).or_default() += 1;
            if let Some(k) = c.n_solutions {
                let label = if c.truncated == Some(true) {
                    format!(">={k}")
                } else {
                    k.to_string()
                };
                *counts.ambiguity.entry(label).or_default() += 1;
            }
            emit(ExampleRecord {
                stage: plan.stage.stage_name.clone(),
                index: c.index,
                global_index: first_global_index + counts.n_examples,
                retry: c.retry,
                pair: c.pair,
                n_solutions: c.n_solutions,
                truncated: c.truncated,
            })?;
            counts.n_examples += 1;
        }
    }
    Ok(counts)
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Generates every stage of `config` into memory.
pub fn generate_records(config: &CorpusConfig, jobs: Option<usize>) -> Result<Vec<ExampleRecord>> {
    config.validate()?;
    in_pool(jobs, || {
        let mut out = Vec::new();
        for stage in &config.stages {
            let plan = StagePlan::new(stage, config.seed, config.ambiguity)?;
            let n = plan.planned_examples(config.probe, config.shards)?;
            let first = out.len() as u64;
            generate_stage(&plan, n, first, config.shards, &mut |r| {
                out.push(r);
                Ok(())
            })?;
        }
        Ok(out)
    })?
}

/// Generates every stage of `config` under `out` (`<stage>/<stage>.*`)
/// and writes `manifest.json`.
pub fn generate_corpus(config: &CorpusConfig, out: &Path, jobs: Option<usize>) -> Result<CorpusManifest> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let manifest = in_pool(jobs, || -> Result<CorpusManifest> {
        let mut manifest = CorpusManifest::new(config);
        let mut next_global = 0;
        for stage in &config.stages {
            let plan = StagePlan::new(stage, config.seed, config.ambiguity)?;
            let n = plan.planned_examples(config.probe, config.shards)?;
            let name = &stage.stage_name;
            let mut writer = RecordWriter::create(out, name, name, config.format)?;
            let counts = generate_stage(&plan, n, next_global, config.shards, &mut |r| writer.write(&r))?;
            let files = writer.finish()?;
            manifest.stages.push(StageReport {
                stage: stage.clone(),
                planned_examples: stage.token_budget.map(|_| n),
                first_global_index: next_global,
                n_examples: counts.n_examples,
                indices_used: counts.indices_used,
                dedup_drops: counts.dedup_drops,
                resamples: counts.resamples,
                source_tokens: counts.source_tokens,
                target_tokens: counts.target_tokens,
                task_counts: counts.task_counts,
                ambiguity_histogram: (config.ambiguity != AmbiguityPolicy::Keep).then_some(counts.ambiguity),
                files,
            });
            next_global += counts.n_examples;
        }
        Ok(manifest)
    })??;
    manifest.save(&out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::{Amount, GeneratorConfig};

    fn corpus(task: TaskKind, n: u64, shards: usize) -> CorpusConfig {
        CorpusConfig {
            seed: 11,
            stages: vec![CurriculumStage::new("s", GeneratorConfig::default(), task, n)],
            shards,
            ..Default::default()
        }
    }

    #[test]
    fn shard_count_does_not_change_output() {
        let a = generate_records(&corpus(TaskKind::Mix, 500, 1), Some(1)).unwrap();
        let b = generate_records(&corpus(TaskKind::Mix, 500, 7), Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        assert!(a.iter().enumerate().all(|(i, r)| r.global_index == i as u64));
    }

    #[test]
    fn every_task_generates_within_length() {
        for task in TaskKind::CONCRETE {
            let recs = generate_records(&corpus(task, 30, 2), None).unwrap();
            assert_eq!(recs.len(), 30);
            assert!(recs.iter().all(|r| r.pair.task == task));
            assert!(recs
                .iter()
                .all(|r| r.pair.source.len() <= 128 && r.pair.target.len() <= 128));
        }
    }

    #[test]
    fn unique_only_keeps_unique_targets() {
        let mut cfg = corpus(TaskKind::Abduct, 40, 2);
        cfg.ambiguity = AmbiguityPolicy::UniqueOnly;
        let recs = generate_records(&cfg, None).unwrap();
        assert!(recs
            .iter()
            .all(|r| r.n_solutions == Some(1) && r.truncated == Some(false)));
    }

    #[test]
    fn zero_budget_plans_nothing() {
        let mut stage = CurriculumStage::new("b", GeneratorConfig::default(), TaskKind::Deduct, 0);
        Amount::Tokens(0).apply(&mut stage);
        assert_eq!(plan_token_budget(&stage, 1, 100).unwrap(), 0);
        Amount::Examples(17).apply(&mut stage);
        assert_eq!(plan_token_budget(&stage, 1, 100).unwrap(), 17);
    }
}
