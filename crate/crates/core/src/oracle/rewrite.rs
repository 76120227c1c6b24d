//! Searches over rewrite applications.

use std::collections::HashSet;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::induct::{AntiSubstitution, Usage, Vars};
use super::matcher::{Matcher, Pattern};
use super::{OracleBounds, SolutionSet};
use crate::rewrite::RewriteRule;
use crate::symbols::{LenRange, SymbolId, SymbolSplit};
use crate::term::Substitution;

/// One rule application inside a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub span: (usize, usize),
    pub binding: Substitution,
    pub result: Vec<SymbolId>,
}

pub type RewriteTrace = Vec<TraceStep>;

/// Every place `rule` applies in `current`, with the rewritten string.
/// Variables bind runs of string symbols whose lengths lie in
/// `binding_len`; `injective` additionally keeps distinct variables apart.
pub fn rewrite_sites(
    split: &SymbolSplit,
    current: &[SymbolId],
    rule: &RewriteRule,
    binding_len: LenRange,
    injective: bool,
) -> Vec<TraceStep> {
    let mut out = Vec::new();
    let pattern = Pattern::compile(&rule.lhs, |s| split.is_rule(s), binding_len);
    // rhs variables absent from the lhs can never be instantiated
    if rule.rhs.iter().any(|&s| split.is_rule(s) && !pattern.vars.contains(&s)) {
        return out;
    }
    let string_only = |v: &[SymbolId]| v.iter().all(|&s| split.is_string(s));
    let m = Matcher {
        pattern: &pattern,
        text: current,
        value_len: binding_len,
        value_ok: &string_only,
        injective,
        anchored: false,
    };
    for start in 0..current.len() {
        let _ = m.for_each(start, &mut |end, ranges| {
            let binding = Substitution::from_entries(
                pattern
                    .vars
                    .iter()
                    .zip(ranges)
                    .map(|(&v, &(a, b))| (v, current[a..b].to_vec()))
                    .collect(),
            )
            .expect("pattern variables are distinct");
            let mut result = Vec::with_capacity(current.len() + rule.rhs.len());
            result.extend_from_slice(&current[..start]);
            for &s in &rule.rhs {
                match binding.get(s) {
                    Some(v) => result.extend_from_slice(v),
                    None => result.push(s),
                }
            }
            result.extend_from_slice(&current[end..]);
            out.push(TraceStep {
                span: (start, end),
                binding,
                result,
            });
            ControlFlow::Continue(())
        });
    }
    out
}

/// Application chains, one application per rule in order, ending in
/// `final_candidate` (any final when `None`).
pub fn solve_rewrite(
    split: &SymbolSplit,
    subject: &[SymbolId],
    rules: &[RewriteRule],
    final_candidate: Option<&[SymbolId]>,
    bounds: &OracleBounds,
) -> SolutionSet<RewriteTrace> {
    solve_rewrite_with(split, subject, rules, final_candidate, bounds, false)
}

pub(crate) fn solve_rewrite_with(
    split: &SymbolSplit,
    subject: &[SymbolId],
    rules: &[RewriteRule],
    final_candidate: Option<&[SymbolId]>,
    bounds: &OracleBounds,
    injective: bool,
) -> SolutionSet<RewriteTrace> {
    struct Search<'a> {
        split: &'a SymbolSplit,
        rules: &'a [RewriteRule],
        target: Option<&'a [SymbolId]>,
        binding_len: LenRange,
        injective: bool,
        dead: HashSet<(usize, Vec<SymbolId>)>,
        trace: RewriteTrace,
        set: SolutionSet<RewriteTrace>,
    }
    impl Search<'_> {
        /// Returns whether any completed trace was found below this state.
        fn go(&mut self, step: usize, current: &[SymbolId]) -> ControlFlow<(), bool> {
            if step == self.rules.len() {
                if self.target.is_some_and(|t| t != current) {
                    return ControlFlow::Continue(false);
                }
                self.set.push(self.trace.clone())?;
                return ControlFlow::Continue(true);
            }
            if self.target.is_some() && self.dead.contains(&(step, current.to_vec())) {
                return ControlFlow::Continue(false);
            }
            let mut found = false;
            for site in rewrite_sites(self.split, current, &self.rules[step], self.binding_len, self.injective) {
                let next = site.result.clone();
                self.trace.push(site);
                let flow = self.go(step + 1, &next);
                self.trace.pop();
                found |= flow?;
            }
            if !found && self.target.is_some() {
                self.dead.insert((step, current.to_vec()));
            }
            ControlFlow::Continue(found)
        }
    }
    let mut search = Search {
        split,
        rules,
        target: final_candidate,
        binding_len: bounds.rewrite.binding_len_range,
        injective,
        dead: HashSet::new(),
        trace: Vec::new(),
        set: SolutionSet::new(bounds.cap),
    };
    let _ = search.go(0, subject);
    search.set
}

/// Distinct strings reachable by applying `rules` in order.
pub fn rewrite_finals(
    split: &SymbolSplit,
    subject: &[SymbolId],
    rules: &[RewriteRule],
    bounds: &OracleBounds,
) -> SolutionSet<Vec<SymbolId>> {
    let mut layer: Vec<Vec<SymbolId>> = vec![subject.to_vec()];
    let mut overflow = false;
    for rule in rules {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        'layer: for current in &layer {
            for site in rewrite_sites(split, current, rule, bounds.rewrite.binding_len_range, false) {
                if seen.insert(site.result.clone()) {
                    next.push(site.result);
                    if next.len() as u64 > bounds.budget {
                        overflow = true;
                        break 'layer;
                    }
                }
            }
        }
        layer = next;
    }
    let mut set = SolutionSet::new(bounds.cap);
    for f in layer {
        if set.push(f).is_break() {
            break;
        }
    }
    set.truncated |= overflow;
    set
}

/// Every way to cut the string runs of `span` into chunks with lengths in
/// `binding_len`, as `(lhs, binding)` with canonical variable names.
fn abstractions(span: &[SymbolId], split: &SymbolSplit, binding_len: LenRange) -> Vec<(Vec<SymbolId>, Substitution)> {
    fn rec(
        span: &[SymbolId],
        i: usize,
        split: &SymbolSplit,
        binding_len: LenRange,
        lhs: &mut Vec<SymbolId>,
        chunks: &mut Vec<Vec<SymbolId>>,
        out: &mut Vec<(Vec<SymbolId>, Substitution)>,
    ) {
        if i == span.len() {
            let binding = Substitution::from_entries(split.rule.iter().copied().zip(chunks.iter().cloned()).collect())
                .expect("rule symbols are distinct");
            out.push((lhs.clone(), binding));
            return;
        }
        if !split.is_string(span[i]) {
            lhs.push(span[i]);
            rec(span, i + 1, split, binding_len, lhs, chunks, out);
            lhs.pop();
            return;
        }
        let run_end = (i..span.len())
            .find(|&j| !split.is_string(span[j]))
            .unwrap_or(span.len());
        for len in 1..=binding_len.max.min(run_end - i).max(1) {
            let chunk = &span[i..i + len];
            let (slot, fresh) = match chunks.iter().position(|c| c == chunk) {
                Some(p) => (p, false),
                None => (chunks.len(), true),
            };
            if slot >= split.rule.len() {
                continue;
            }
            if fresh {
                chunks.push(chunk.to_vec());
            }
            lhs.push(split.rule[slot]);
            rec(span, i + len, split, binding_len, lhs, chunks, out);
            lhs.pop();
            if fresh {
                chunks.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(span, 0, split, binding_len, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Rules that could have turned `subject` into `rewritten` in one step:
/// an abstracted span of `subject` on the left and any right-hand side over
/// its variables and math symbols that produces the rewritten region.
pub fn solve_induct_rewrite(
    split: &SymbolSplit,
    subject: &[SymbolId],
    rewritten: &[SymbolId],
    bounds: &OracleBounds,
) -> SolutionSet<RewriteRule> {
    let cfg = &bounds.rewrite;
    let (n, m) = (subject.len(), rewritten.len());
    let common_prefix = subject.iter().zip(rewritten).take_while(|(a, b)| a == b).count();
    let common_suffix = subject
        .iter()
        .rev()
        .zip(rewritten.iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let mut set = SolutionSet::new(bounds.cap);
    let mut seen: HashSet<RewriteRule> = HashSet::new();
    let literal_ok = |s: SymbolId| split.is_math(s);
    let value_ok = |_: &[SymbolId]| true;
    let mut exhausted = false;
    'outer: for start in 0..=common_prefix.min(n) {
        for end in start + cfg.span_len_range.min.max(1)..=n.min(start + cfg.span_len_range.max) {
            let suffix = n - end;
            if suffix > common_suffix || m < start + suffix {
                continue;
            }
            let span = &subject[start..end];
            if !span.iter().any(|&s| split.is_string(s)) {
                continue;
            }
            let region = &rewritten[start..m - suffix];
            for (lhs, binding) in abstractions(span, split, cfg.binding_len_range) {
                let keys: Vec<SymbolId> = binding.keys().collect();
                let values = binding.iter().map(|(_, v)| vec![Some(v)]).collect();
                let search = AntiSubstitution {
                    tracks: vec![region],
                    vars: Vars::Fixed { keys, values },
                    literal_ok: &literal_ok,
                    value_ok: &value_ok,
                    rule_len: cfg.rhs_len_range,
                    usage: Usage::AtLeastOne,
                    budget: bounds.budget,
                };
                let mut stop = false;
                exhausted |= search.run(&mut |rhs, _| {
                    let rule = RewriteRule {
                        lhs: lhs.clone(),
                        rhs: rhs.to_vec(),
                    };
                    if seen.insert(rule.clone()) && set.push(rule).is_break() {
                        stop = true;
                        return ControlFlow::Break(());
                    }
                    ControlFlow::Continue(())
                });
                if stop {
                    break 'outer;
                }
            }
        }
    }
    set.truncated |= exhausted;
    set
}

/// `rule` with its variables renamed by first occurrence in the left side
/// to the split's rule symbols in order, the naming the solver uses.
pub fn canonical_rewrite_rule(split: &SymbolSplit, rule: &RewriteRule) -> Option<RewriteRule> {
    let (lhs, renaming) = super::canonical_rule(split, &rule.lhs)?;
    let rhs = rule
        .rhs
        .iter()
        .map(|&s| renaming.iter().find(|(from, _)| *from == s).map_or(s, |&(_, to)| to))
        .collect();
    Some(RewriteRule { lhs, rhs })
}

/// Whether `rule` is, up to renaming of its variables, a rule
/// [`solve_induct_rewrite`] could return.
pub fn is_induct_rewrite_solution(
    split: &SymbolSplit,
    subject: &[SymbolId],
    rewritten: &[SymbolId],
    rule: &RewriteRule,
    bounds: &OracleBounds,
) -> bool {
    let cfg = &bounds.rewrite;
    // rhs variables missing from the lhs would get mixed up with renamed ones
    let fresh_rhs = rule.rhs.iter().any(|&s| split.is_rule(s) && !rule.lhs.contains(&s));
    let Some(rule) = canonical_rewrite_rule(split, rule).filter(|_| !fresh_rhs) else {
        return false;
    };
    let rule = &rule;
    let lhs_vars = crate::term::first_occurrences(&rule.lhs, |s| split.is_rule(s));
    let shape = !lhs_vars.is_empty()
        && cfg.span_len_range.contains(rule.lhs.len())
        && cfg.rhs_len_range.contains(rule.rhs.len())
        && rule.lhs.iter().all(|&s| split.is_rule(s) || split.is_math(s))
        && rule.rhs.iter().all(|&s| split.is_math(s) || lhs_vars.contains(&s))
        && rule.rhs.iter().any(|s| lhs_vars.contains(s));
    if !shape {
        return false;
    }
    let probe = OracleBounds {
        cap: 1,
        ..bounds.clone()
    };
    !solve_rewrite_with(
        split,
        subject,
        std::slice::from_ref(rule),
        Some(rewritten),
        &probe,
        true,
    )
    .is_empty()
}
