//! Exact solvers for every task kind and per-example verification.
//!
//! Each solver enumerates the full set of admissible targets for a source,
//! up to a cap. Targets are checked with a direct predicate, so a truncated
//! enumeration never turns a correct target into a failure.

mod induct;
mod matcher;
pub mod rewrite;

use std::collections::HashSet;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::codec::{decode_example, DecodedExample, SeqPair, SourceContent, Target, TaskKind};
use crate::error::{Error, Result};
use crate::rewrite::RewriteConfig;
use crate::symbols::{LenRange, SymbolId, SymbolSpaceConfig, SymbolSplit};
use crate::term::{apply_substitution, first_occurrences, Substitution};
use induct::{AntiSubstitution, Usage, Vars};
use matcher::{Matcher, Pattern};

pub use rewrite::{
    canonical_rewrite_rule, is_induct_rewrite_solution, rewrite_finals, rewrite_sites, solve_induct_rewrite,
    solve_rewrite, RewriteTrace, TraceStep,
};

pub const DEFAULT_CAP: usize = 64;
pub const DEFAULT_BUDGET: u64 = 250_000;

/// Length bounds the solvers enumerate within, normally the generation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleBounds {
    pub value_len: LenRange,
    pub rule_len: LenRange,
    pub rewrite: RewriteConfig,
    pub cap: usize,
    /// Search nodes (or reachable strings per rewrite step) before a search
    /// gives up and reports itself truncated.
    pub budget: u64,
    /// Induction may leave case keys out of the rule.
    pub allow_unused_keys: bool,
}

impl Default for OracleBounds {
    fn default() -> Self {
        OracleBounds::from_configs(&SymbolSpaceConfig::default(), &RewriteConfig::default())
    }
}

impl OracleBounds {
    pub fn from_configs(symbols: &SymbolSpaceConfig, rewrite: &RewriteConfig) -> Self {
        OracleBounds {
            value_len: symbols.value_len_range,
            rule_len: symbols.rule_len_range,
            rewrite: rewrite.clone(),
            cap: DEFAULT_CAP,
            budget: DEFAULT_BUDGET,
            allow_unused_keys: false,
        }
    }

    pub fn with_value_len(mut self, r: LenRange) -> Self {
        self.value_len = r;
        self
    }

    pub fn with_rule_len(mut self, r: LenRange) -> Self {
        self.rule_len = r;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }
}

/// Distinct solutions, at most `cap` of them. `truncated` is set when a
/// further solution exists or the search budget ran out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet<T> {
    pub solutions: Vec<T>,
    pub truncated: bool,
    pub cap: usize,
}

impl<T> SolutionSet<T> {
    pub fn new(cap: usize) -> Self {
        SolutionSet {
            solutions: Vec::new(),
            truncated: false,
            cap,
        }
    }

    /// Adds a solution; breaks once the cap is exceeded.
    pub fn push(&mut self, item: T) -> ControlFlow<()> {
        if self.solutions.len() >= self.cap {
            self.truncated = true;
            return ControlFlow::Break(());
        }
        self.solutions.push(item);
        ControlFlow::Continue(())
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// `"3"`, or `">=64"` when truncated.
    pub fn count_label(&self) -> String {
        if self.truncated {
            format!(">={}", self.len())
        } else {
            self.len().to_string()
        }
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> SolutionSet<U> {
        SolutionSet {
            solutions: self.solutions.into_iter().map(f).collect(),
            truncated: self.truncated,
            cap: self.cap,
        }
    }
}

fn all_math(split: &SymbolSplit) -> impl Fn(&[SymbolId]) -> bool + '_ {
    |v: &[SymbolId]| v.iter().all(|&s| split.is_math(s))
}

pub fn verify_deduct(
    split: &SymbolSplit,
    rule: &[SymbolId],
    case: &Substitution,
    candidate: &[SymbolId],
) -> Result<bool> {
    Ok(apply_substitution(split, rule, case)? == candidate)
}

/// Every case (over math symbols, value lengths in `bounds.value_len`) that
/// instantiates `rule` to `result`. Keys follow first occurrence in the rule.
pub fn solve_abduct(
    split: &SymbolSplit,
    rule: &[SymbolId],
    result: &[SymbolId],
    bounds: &OracleBounds,
) -> SolutionSet<Substitution> {
    let pattern = Pattern::compile(rule, |s| split.is_rule(s), bounds.value_len);
    let value_ok = all_math(split);
    let m = Matcher {
        pattern: &pattern,
        text: result,
        value_len: bounds.value_len,
        value_ok: &value_ok,
        injective: false,
        anchored: true,
    };
    let mut set = SolutionSet::new(bounds.cap);
    let _ = m.for_each(0, &mut |_, ranges| {
        let case = pattern
            .vars
            .iter()
            .zip(ranges)
            .map(|(&v, &(a, b))| (v, result[a..b].to_vec()))
            .collect();
        set.push(Substitution::from_entries(case).expect("pattern variables are distinct"))
    });
    set
}

fn fixed_induction(
    split: &SymbolSplit,
    pairs: &[(&Substitution, &[SymbolId])],
    bounds: &OracleBounds,
) -> SolutionSet<Vec<SymbolId>> {
    let mut keys: Vec<SymbolId> = Vec::new();
    for (case, _) in pairs {
        for k in case.keys() {
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    let values = keys
        .iter()
        .map(|&k| pairs.iter().map(|(c, _)| c.get(k)).collect())
        .collect();
    let literal_ok = |s: SymbolId| split.is_math(s);
    let search = AntiSubstitution {
        tracks: pairs.iter().map(|(_, r)| *r).collect(),
        vars: Vars::Fixed { keys, values },
        literal_ok: &literal_ok,
        value_ok: &|_| true,
        rule_len: bounds.rule_len,
        usage: if bounds.allow_unused_keys {
            Usage::Any
        } else {
            Usage::All
        },
        budget: bounds.budget,
    };
    let mut set = SolutionSet::new(bounds.cap);
    let exhausted = search.run(&mut |rule, _| set.push(rule.to_vec()));
    set.truncated |= exhausted;
    set
}

/// Rules with length in `bounds.rule_len` that `case` instantiates to
/// `result`, using every case key unless `allow_unused_keys` is set.
pub fn solve_induct(
    split: &SymbolSplit,
    case: &Substitution,
    result: &[SymbolId],
    bounds: &OracleBounds,
) -> SolutionSet<Vec<SymbolId>> {
    fixed_induction(split, &[(case, result)], bounds)
}

/// Rules consistent with every `(case, result)` pair at once.
pub fn solve_induct_v3(
    split: &SymbolSplit,
    pairs: &[(&Substitution, &[SymbolId])],
    bounds: &OracleBounds,
) -> SolutionSet<Vec<SymbolId>> {
    fixed_induction(split, pairs, bounds)
}

/// A rule together with the case explaining each result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeInduction {
    pub rule: Vec<SymbolId>,
    pub cases: Vec<Substitution>,
}

/// Rules (up to renaming of variables) and cases explaining all `results`,
/// when no case is given. Variables are the split's rule symbols in order
/// of first occurrence; the rule must use at least one.
pub fn solve_induct_free(
    split: &SymbolSplit,
    results: &[&[SymbolId]],
    bounds: &OracleBounds,
) -> SolutionSet<FreeInduction> {
    let mut set = SolutionSet::new(bounds.cap);
    let exhausted = free_search(split, results, bounds, &mut |rule, bindings| {
        let cases = (0..results.len())
            .map(|t| {
                Substitution::from_entries(
                    bindings
                        .iter()
                        .enumerate()
                        .map(|(v, b)| (split.rule[v], results[t][b[t].0..b[t].1].to_vec()))
                        .collect(),
                )
                .expect("canonical names are distinct")
            })
            .collect();
        set.push(FreeInduction {
            rule: rule.to_vec(),
            cases,
        })
    });
    set.truncated |= exhausted;
    set
}

/// Distinct rules (up to renaming) explaining all `results` with some cases.
pub fn solve_induct_free_rules(
    split: &SymbolSplit,
    results: &[&[SymbolId]],
    bounds: &OracleBounds,
) -> SolutionSet<Vec<SymbolId>> {
    let mut set = SolutionSet::new(bounds.cap);
    let mut seen = HashSet::new();
    let exhausted = free_search(split, results, bounds, &mut |rule, _| {
        if seen.insert(rule.to_vec()) {
            set.push(rule.to_vec())
        } else {
            ControlFlow::Continue(())
        }
    });
    set.truncated |= exhausted;
    set
}

fn free_search(
    split: &SymbolSplit,
    results: &[&[SymbolId]],
    bounds: &OracleBounds,
    on: &mut dyn FnMut(&[SymbolId], &induct::Bindings) -> ControlFlow<()>,
) -> bool {
    let literal_ok = |s: SymbolId| split.is_math(s);
    let value_ok = all_math(split);
    AntiSubstitution {
        tracks: results.to_vec(),
        vars: Vars::Free {
            names: &split.rule,
            value_len: bounds.value_len,
        },
        literal_ok: &literal_ok,
        value_ok: &value_ok,
        rule_len: bounds.rule_len,
        usage: Usage::AtLeastOne,
        budget: bounds.budget,
    }
    .run(on)
}

/// Pairs `(from, to)` of a variable renaming.
pub type Renaming = Vec<(SymbolId, SymbolId)>;

/// Renames rule symbols by first occurrence to the split's rule class in
/// order. Returns the renamed sequence and the renaming, or `None` when the
/// sequence uses more variables than the split has.
pub fn canonical_rule(split: &SymbolSplit, rule: &[SymbolId]) -> Option<(Vec<SymbolId>, Renaming)> {
    let vars = first_occurrences(rule, |s| split.is_rule(s));
    if vars.len() > split.rule.len() {
        return None;
    }
    let renaming: Vec<(SymbolId, SymbolId)> = vars.into_iter().zip(split.rule.iter().copied()).collect();
    let renamed = rule
        .iter()
        .map(|&s| renaming.iter().find(|(from, _)| *from == s).map_or(s, |&(_, to)| to))
        .collect();
    Some((renamed, renaming))
}

fn mismatch(task: TaskKind) -> Error {
    Error::TaskMismatch {
        task: task.name().to_string(),
        input: "source of another task",
    }
}

/// All admissible targets for a decoded source.
pub fn solve_source(
    task: TaskKind,
    split: &SymbolSplit,
    source: &SourceContent,
    bounds: &OracleBounds,
) -> Result<SolutionSet<Target>> {
    Ok(match (task, source) {
        (TaskKind::Deduct, SourceContent::RuleCase { rule, case }) => {
            let mut set = SolutionSet::new(bounds.cap.max(1));
            if let Ok(result) = apply_substitution(split, rule, case) {
                let _ = set.push(Target::Sequence(result));
            }
            set
        }
        (TaskKind::Abduct, SourceContent::RuleResult { rule, result }) => {
            solve_abduct(split, rule, result, bounds).map(Target::Case)
        }
        (TaskKind::Induct, SourceContent::CaseResult { case, result }) => {
            solve_induct(split, case, result, bounds).map(Target::Sequence)
        }
        (TaskKind::InductV2, SourceContent::Result { result }) => {
            solve_induct_free(split, &[result], bounds).map(|mut f| Target::RuleCase(f.rule, f.cases.remove(0)))
        }
        (TaskKind::InductV3, SourceContent::Results { first, second }) => {
            solve_induct_free_rules(split, &[first, second], bounds).map(Target::Sequence)
        }
        (TaskKind::Rewrite | TaskKind::RewriteMultistep, SourceContent::Rewrite { subject, rules }) => {
            rewrite_finals(split, subject, rules, bounds).map(Target::Sequence)
        }
        (TaskKind::InductRewrite, SourceContent::Rewritten { subject, rewritten }) => {
            solve_induct_rewrite(split, subject, rewritten, bounds).map(Target::Rule)
        }
        _ => return Err(mismatch(task)),
    })
}

fn case_well_formed(split: &SymbolSplit, rule: &[SymbolId], case: &Substitution, bounds: &OracleBounds) -> bool {
    let vars = first_occurrences(rule, |s| split.is_rule(s));
    case.len() == vars.len()
        && vars.iter().all(|&v| case.get(v).is_some())
        && case
            .iter()
            .all(|(_, v)| bounds.value_len.contains(v.len()) && v.iter().all(|&s| split.is_math(s)))
}

fn rule_well_formed(split: &SymbolSplit, rule: &[SymbolId], bounds: &OracleBounds) -> bool {
    bounds.rule_len.contains(rule.len()) && rule.iter().all(|&s| split.is_rule(s) || split.is_math(s))
}

/// Whether `target` is an admissible answer for `source`, checked directly
/// rather than through enumeration.
pub fn is_solution(
    task: TaskKind,
    split: &SymbolSplit,
    source: &SourceContent,
    target: &Target,
    bounds: &OracleBounds,
) -> Result<bool> {
    let applies = |rule: &[SymbolId], case: &Substitution, result: &[SymbolId]| {
        apply_substitution(split, rule, case).is_ok_and(|r| r == result)
    };
    Ok(match (task, source, target) {
        (TaskKind::Deduct, SourceContent::RuleCase { rule, case }, Target::Sequence(result)) => {
            applies(rule, case, result)
        }
        (TaskKind::Abduct, SourceContent::RuleResult { rule, result }, Target::Case(case)) => {
            case_well_formed(split, rule, case, bounds) && applies(rule, case, result)
        }
        (TaskKind::Induct, SourceContent::CaseResult { case, result }, Target::Sequence(rule)) => {
            let used = first_occurrences(rule, |s| split.is_rule(s));
            rule_well_formed(split, rule, bounds)
                && (bounds.allow_unused_keys || case.keys().all(|k| used.contains(&k)))
                && applies(rule, case, result)
        }
        (TaskKind::InductV2, SourceContent::Result { result }, Target::RuleCase(rule, case)) => {
            rule_well_formed(split, rule, bounds)
                && !case.is_empty()
                && case_well_formed(split, rule, case, bounds)
                && applies(rule, case, result)
        }
        (TaskKind::InductV3, SourceContent::Results { first, second }, Target::Sequence(rule)) => {
            let probe = OracleBounds {
                cap: 1,
                ..bounds.clone()
            };
            rule_well_formed(split, rule, bounds)
                && rule.iter().any(|&s| split.is_rule(s))
                && [first, second]
                    .iter()
                    .all(|r| !solve_abduct(split, rule, r, &probe).is_empty())
        }
        (
            TaskKind::Rewrite | TaskKind::RewriteMultistep,
            SourceContent::Rewrite { subject, rules },
            Target::Sequence(f),
        ) => {
            let probe = OracleBounds {
                cap: 1,
                ..bounds.clone()
            };
            !solve_rewrite(split, subject, rules, Some(f), &probe).is_empty()
        }
        (TaskKind::InductRewrite, SourceContent::Rewritten { subject, rewritten }, Target::Rule(rule)) => {
            is_induct_rewrite_solution(split, subject, rewritten, rule, bounds)
        }
        _ => return Err(mismatch(task)),
    })
}

/// Whether `target` appears in `set`, comparing up to the equivalences the
/// solvers enumerate modulo: case entry order and variable renaming.
pub fn set_contains(task: TaskKind, split: &SymbolSplit, set: &SolutionSet<Target>, target: &Target) -> bool {
    match (task, target) {
        (TaskKind::Abduct, Target::Case(c)) => set
            .solutions
            .iter()
            .any(|s| matches!(s, Target::Case(x) if x.same_mapping(c))),
        (TaskKind::InductV2, Target::RuleCase(rule, case)) => {
            let Some((rule, renaming)) = canonical_rule(split, rule) else {
                return false;
            };
            let case = Substitution::from_entries(
                case.iter()
                    .map(|(k, v)| {
                        (
                            renaming.iter().find(|(f, _)| *f == k).map_or(k, |&(_, t)| t),
                            v.to_vec(),
                        )
                    })
                    .collect(),
            );
            let Ok(case) = case else {
                return false;
            };
            set.solutions
                .iter()
                .any(|s| matches!(s, Target::RuleCase(r, c) if *r == rule && c.same_mapping(&case)))
        }
        (TaskKind::InductRewrite, Target::Rule(rule)) => canonical_rewrite_rule(split, rule)
            .is_some_and(|rule| set.solutions.iter().any(|s| matches!(s, Target::Rule(r) if *r == rule))),
        (TaskKind::InductV3, Target::Sequence(rule)) => canonical_rule(split, rule).is_some_and(|(rule, _)| {
            set.solutions
                .iter()
                .any(|s| matches!(s, Target::Sequence(r) if *r == rule))
        }),
        _ => set.solutions.contains(target),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub task: TaskKind,
    /// The target is admissible and, when the enumeration is complete, in it.
    pub valid: bool,
    pub target_is_solution: bool,
    /// `None` when the target was not seen in a truncated enumeration.
    pub in_enumeration: Option<bool>,
    pub n_solutions: usize,
    pub truncated: bool,
}

impl VerificationReport {
    pub fn unique(&self) -> bool {
        self.target_is_solution && self.n_solutions == 1 && !self.truncated
    }
}

pub fn verify_decoded(decoded: &DecodedExample, bounds: &OracleBounds) -> Result<VerificationReport> {
    let set = solve_source(decoded.task, &decoded.split, &decoded.source, bounds)?;
    let target_is_solution = is_solution(decoded.task, &decoded.split, &decoded.source, &decoded.target, bounds)?;
    let in_enumeration = match set_contains(decoded.task, &decoded.split, &set, &decoded.target) {
        true => Some(true),
        false if set.truncated => None,
        false => Some(false),
    };
    Ok(VerificationReport {
        task: decoded.task,
        valid: target_is_solution && in_enumeration != Some(false),
        target_is_solution,
        in_enumeration,
        n_solutions: set.len(),
        truncated: set.truncated,
    })
}

/// Decodes `pair` (falling back to its input's split when there is no
/// header) and verifies it.
pub fn verify_example(pair: &SeqPair, bounds: &OracleBounds) -> Result<VerificationReport> {
    let decoded = decode_example(&pair.source, &pair.target, pair.task, Some(pair.input.split()))?;
    verify_decoded(&decoded, bounds)
}
