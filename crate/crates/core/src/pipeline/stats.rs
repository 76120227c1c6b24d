use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::GeneratorConfig;
use super::manifest::CorpusManifest;
use super::record::LoadedExample;
use crate::codec::{ExampleInput, TaskKind};
use crate::rewrite::RewriteInstance;
use crate::symbols::SymbolSplit;
use crate::term::{apply_substitution, Substitution, TermTriple};

/// Generation-config violations found in one corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Examples that carried generation meta.
    pub checked: u64,
    pub violations: BTreeMap<String, u64>,
}

impl FidelityReport {
    pub fn total_violations(&self) -> u64 {
        self.violations.values().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n_examples: u64,
    pub task_counts: BTreeMap<TaskKind, u64>,
    pub source_len: BTreeMap<usize, u64>,
    pub target_len: BTreeMap<usize, u64>,
    pub max_source_len: usize,
    pub max_target_len: usize,
    pub mean_source_len: f64,
    pub mean_target_len: f64,
    /// Occurrences of each symbol id across sources and targets.
    pub symbol_usage: BTreeMap<u32, u64>,
    /// Dropped duplicates per generated index, from the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedup_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity: Option<BTreeMap<String, u64>>,
    pub fidelity: FidelityReport,
}

fn split_violations(split: &SymbolSplit, cfg: &GeneratorConfig, with_string: bool, v: &mut Vec<&'static str>) {
    if split.check().is_err() {
        v.push("split_overlap");
    }
    if split.math.len() != cfg.symbols.n_math {
        v.push("math_count");
    }
    if split.rule.len() != cfg.symbols.n_rule {
        v.push("rule_count");
    }
    let want_string = if with_string { cfg.symbols.n_string } else { 0 };
    if split.string.len() != want_string {
        v.push("string_count");
    }
    if split
        .math
        .iter()
        .chain(&split.rule)
        .chain(&split.string)
        .any(|s| s.0 == 0 || s.0 > cfg.symbols.vocab_size)
    {
        v.push("symbol_out_of_vocab");
    }
}

fn case_violations(
    t: &TermTriple,
    case: &Substitution,
    result: &[crate::symbols::SymbolId],
    cfg: &GeneratorConfig,
    v: &mut Vec<&'static str>,
) {
    if case
        .iter()
        .any(|(_, val)| !cfg.symbols.value_len_range.contains(val.len()))
    {
        v.push("value_len");
    }
    if case.iter().any(|(_, val)| val.iter().any(|&s| !t.split.is_math(s))) {
        v.push("value_class");
    }
    if apply_substitution(&t.split, &t.rule, case).ok().as_deref() != Some(result) {
        v.push("substitution");
    }
}

fn triple_violations(t: &TermTriple, cfg: &GeneratorConfig, v: &mut Vec<&'static str>) {
    split_violations(&t.split, cfg, false, v);
    if !cfg.symbols.rule_len_range.contains(t.rule.len()) {
        v.push("rule_len");
    }
    if !t.rule.iter().any(|&s| t.split.is_rule(s)) {
        v.push("rule_without_variable");
    }
    if t.rule.iter().any(|&s| !t.split.is_rule(s) && !t.split.is_math(s)) {
        v.push("rule_class");
    }
    case_violations(t, &t.case, &t.result, cfg, v);
}

fn rewrite_violations(r: &RewriteInstance, task: TaskKind, cfg: &GeneratorConfig, v: &mut Vec<&'static str>) {
    split_violations(&r.split, cfg, true, v);
    let rw = &cfg.rewrite;
    if !rw.subject_len_range.contains(r.subject.len()) {
        v.push("subject_len");
    }
    let steps_ok = match task {
        TaskKind::RewriteMultistep => rw.steps_range.contains(r.steps.len()),
        _ => r.steps.len() == 1,
    };
    if !steps_ok {
        v.push("steps");
    }
    for step in &r.steps {
        if !rw.rhs_len_range.contains(step.rule.rhs.len()) {
            v.push("rhs_len");
        }
        if !rw.span_len_range.contains(step.span.1 - step.span.0) {
            v.push("span_len");
        }
        if step.rule.check(&r.split).is_err() {
            v.push("rule_shape");
        }
    }
    if r.replay().ok().and_then(|s| s.last().cloned()).as_ref() != Some(&r.final_) {
        v.push("replay");
    }
}

/// Everything `ex` violates under `cfg`; empty without generation meta
/// beyond the length limit checks.
pub fn fidelity_violations(ex: &LoadedExample, cfg: &GeneratorConfig) -> Vec<&'static str> {
    let mut v = Vec::new();
    if ex.source.len() > cfg.max_seq_len {
        v.push("source_len");
    }
    if ex.target.len() > cfg.max_seq_len {
        v.push("target_len");
    }
    match &ex.input {
        Some(ExampleInput::Triple(t)) => triple_violations(t, cfg, &mut v),
        Some(ExampleInput::TriplePair(p)) => {
            triple_violations(&p.triple, cfg, &mut v);
            case_violations(&p.triple, &p.second_case, &p.second_result, cfg, &mut v);
        }
        Some(ExampleInput::Rewrite(r)) => rewrite_violations(r, ex.task, cfg, &mut v),
        None => {}
    }
    v
}

/// Counts, length and symbol histograms, and config fidelity of a corpus.
/// Fidelity uses each example's stage config from the manifest, or the
/// defaults when there is none.
pub fn corpus_stats(examples: &[LoadedExample], manifest: Option<&CorpusManifest>) -> StatsReport {
    let mut r = StatsReport::default();
    let default_cfg = GeneratorConfig::default();
    let mut src_total = 0u64;
    let mut tgt_total = 0u64;
    let mut ambiguity: BTreeMap<String, u64> = BTreeMap::new();
    for ex in examples {
        r.n_examples += 1;
        *r.task_counts.entry(ex.task).or_default() += 1;
        *r.source_len.entry(ex.source.len()).or_default() += 1;
        *r.target_len.entry(ex.target.len()).or_default() += 1;
        r.max_source_len = r.max_source_len.max(ex.source.len());
        r.max_target_len = r.max_target_len.max(ex.target.len());
        src_total += ex.source.len() as u64;
        tgt_total += ex.target.len() as u64;
        for s in ex.source.iter().chain(&ex.target).filter_map(|t| t.as_symbol()) {
            *r.symbol_usage.entry(s.0).or_default() += 1;
        }
        if let Some(n) = ex.n_solutions {
            let label = if ex.truncated == Some(true) {
                format!(">={n}")
            } else {
                n.to_string()
            };
            *ambiguity.entry(label).or_default() += 1;
        }
        let cfg = manifest
            .zip(ex.stage.as_deref())
            .and_then(|(m, name)| m.stage(name))
            .map_or(&default_cfg, |s| &s.stage.config);
        if ex.input.is_some() {
            r.fidelity.checked += 1;
        }
        for violation in fidelity_violations(ex, cfg) {
            *r.fidelity.violations.entry(violation.to_string()).or_default() += 1;
        }
    }
    if r.n_examples > 0 {
        r.mean_source_len = src_total as f64 / r.n_examples as f64;
        r.mean_target_len = tgt_total as f64 / r.n_examples as f64;
    }
    if !ambiguity.is_empty() {
        r.ambiguity = Some(ambiguity);
    }
    if let Some(m) = manifest {
        let used: u64 = m.stages.iter().map(|s| s.indices_used).sum();
        let dropped: u64 = m.stages.iter().map(|s| s.dedup_drops).sum();
        r.dedup_rate = Some(if used == 0 { 0.0 } else { dropped as f64 / used as f64 });
    }
    r
}
