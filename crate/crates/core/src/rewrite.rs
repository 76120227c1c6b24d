//! String rewriting: subjects over math and string symbols, rules abstracted
//! from sampled spans, and single or multi-step application chains.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::{sample_split, LenRange, SymbolId, SymbolSpaceConfig, SymbolSplit};
use crate::term::{apply_substitution, first_occurrences, Substitution, MAX_RESAMPLE_ATTEMPTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewriteConfig {
    pub subject_len_range: LenRange,
    pub rhs_len_range: LenRange,
    pub span_len_range: LenRange,
    /// Lengths of the string-symbol chunks one variable abstracts.
    /// The minimum must be 1 so every string run can be covered.
    pub binding_len_range: LenRange,
    /// Step counts drawn for `rewrite_multistep`.
    pub steps_range: LenRange,
}

impl Default for RewriteConfig {
    fn default() -> Self {
        RewriteConfig {
            subject_len_range: LenRange { min: 5, max: 20 },
            rhs_len_range: LenRange { min: 2, max: 8 },
            span_len_range: LenRange { min: 2, max: 8 },
            binding_len_range: LenRange { min: 1, max: 1 },
            steps_range: LenRange { min: 1, max: 5 },
        }
    }
}

impl RewriteConfig {
    pub fn validate(&self, symbols: &SymbolSpaceConfig) -> Result<()> {
        for (name, r) in [
            ("subject_len_range", self.subject_len_range),
            ("rhs_len_range", self.rhs_len_range),
            ("span_len_range", self.span_len_range),
            ("binding_len_range", self.binding_len_range),
            ("steps_range", self.steps_range),
        ] {
            LenRange::new(r.min, r.max).map_err(|e| Error::config(format!("{name}: {e}")))?;
        }
        if self.binding_len_range.min != 1 {
            return Err(Error::config("binding_len_range must start at 1"));
        }
        if self.span_len_range.max > symbols.n_rule {
            return Err(Error::config(
                "span_len_range.max exceeds n_rule; spans could run out of variables",
            ));
        }
        Ok(())
    }
}

/// `lhs = rhs` over rule and math symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RewriteRule {
    pub lhs: Vec<SymbolId>,
    pub rhs: Vec<SymbolId>,
}

impl RewriteRule {
    pub fn check(&self, split: &SymbolSplit) -> Result<(), String> {
        let pattern_ok = |s: &SymbolId| split.is_math(*s) || split.is_rule(*s);
        if !self.lhs.iter().all(pattern_ok) || !self.rhs.iter().all(pattern_ok) {
            return Err("patterns may only hold math and rule symbols".into());
        }
        if !self.lhs.iter().any(|&s| split.is_rule(s)) {
            return Err("lhs has no rule symbol".into());
        }
        if let Some(v) = self.rhs.iter().find(|&&s| split.is_rule(s) && !self.lhs.contains(&s)) {
            return Err(format!("rhs variable {v} does not occur in lhs"));
        }
        Ok(())
    }

    pub fn relabel(&self, map: &impl Fn(SymbolId) -> SymbolId) -> Self {
        RewriteRule {
            lhs: self.lhs.iter().map(|&s| map(s)).collect(),
            rhs: self.rhs.iter().map(|&s| map(s)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub rule: RewriteRule,
    /// Half-open `[start, end)` in the string before this step.
    pub span: (usize, usize),
    pub binding: Substitution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteInstance {
    pub split: SymbolSplit,
    pub subject: Vec<SymbolId>,
    pub steps: Vec<RewriteStep>,
    #[serde(rename = "final")]
    pub final_: Vec<SymbolId>,
}

impl RewriteInstance {
    /// Strings after each step; the last one is the final string.
    pub fn replay(&self) -> Result<Vec<Vec<SymbolId>>> {
        let mut current = self.subject.clone();
        let mut out = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            current = apply_rewrite_at(&self.split, &current, &step.rule, step.span, &step.binding)?;
            out.push(current.clone());
        }
        Ok(out)
    }

    pub fn check(&self, steps_range: LenRange) -> Result<(), String> {
        if !steps_range.contains(self.steps.len()) {
            return Err(format!("{} steps outside {steps_range}", self.steps.len()));
        }
        let split = &self.split;
        let text_ok = |s: &SymbolId| split.is_math(*s) || split.is_string(*s);
        if !self.subject.iter().all(text_ok) || !self.final_.iter().all(text_ok) {
            return Err("subject and final may only hold math and string symbols".into());
        }
        for step in &self.steps {
            step.rule.check(split)?;
            if step
                .binding
                .iter()
                .any(|(_, v)| v.is_empty() || !v.iter().all(|&s| split.is_string(s)))
            {
                return Err("bindings must be nonempty string-symbol sequences".into());
            }
        }
        let states = self.replay().map_err(|e| e.to_string())?;
        let last = states.last().unwrap_or(&self.subject);
        if *last != self.final_ {
            return Err("replay does not reproduce the final string".into());
        }
        Ok(())
    }

    pub fn relabel(&self, map: &impl Fn(SymbolId) -> SymbolId) -> Result<Self> {
        let m = |v: &[SymbolId]| v.iter().map(|&s| map(s)).collect::<Vec<_>>();
        Ok(RewriteInstance {
            split: self.split.relabel(map)?,
            subject: m(&self.subject),
            steps: self
                .steps
                .iter()
                .map(|st| RewriteStep {
                    rule: st.rule.relabel(map),
                    span: st.span,
                    binding: st.binding.relabel(map),
                })
                .collect(),
            final_: m(&self.final_),
        })
    }
}

/// Random subject with at least one string symbol.
pub fn sample_subject<R: RngCore + ?Sized>(
    split: &SymbolSplit,
    config: &RewriteConfig,
    rng: &mut R,
) -> Result<Vec<SymbolId>> {
    if split.math.is_empty() || split.string.is_empty() {
        return Err(Error::Generation("subjects need math and string symbols".into()));
    }
    let pool: Vec<SymbolId> = split.math.iter().chain(&split.string).copied().collect();
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let len = config.subject_len_range.sample(rng);
        let s: Vec<SymbolId> = (0..len).map(|_| *pool.choose(rng).expect("nonempty")).collect();
        if s.iter().any(|&t| split.is_string(t)) {
            return Ok(s);
        }
    }
    Err(Error::Generation("no subject with a string symbol".into()))
}

/// Turns `subject[span]` into a pattern: string symbols are replaced by
/// fresh rule symbols (the split's rule class in ascending order, assigned by
/// first occurrence) and math symbols stay literal. With a binding range
/// wider than one, runs of string symbols are cut into random chunks and each
/// distinct chunk gets one variable.
pub fn abstract_span<R: RngCore + ?Sized>(
    subject: &[SymbolId],
    span: (usize, usize),
    split: &SymbolSplit,
    binding_len_range: LenRange,
    rng: &mut R,
) -> Result<(Vec<SymbolId>, Substitution)> {
    let (start, end) = span;
    if start >= end || end > subject.len() || !subject[start..end].iter().any(|&s| split.is_string(s)) {
        return Err(Error::InvalidSpan { start, end });
    }
    let mut lhs = Vec::with_capacity(end - start);
    let mut chunks: Vec<&[SymbolId]> = Vec::new();
    let mut binding = Substitution::new();
    let mut i = start;
    while i < end {
        if !split.is_string(subject[i]) {
            lhs.push(subject[i]);
            i += 1;
            continue;
        }
        let run_end = (i..end).find(|&j| !split.is_string(subject[j])).unwrap_or(end);
        while i < run_end {
            let longest = binding_len_range.max.min(run_end - i);
            let len = if longest <= 1 { 1 } else { rng.random_range(1..=longest) };
            let chunk = &subject[i..i + len];
            let slot = match chunks.iter().position(|c| *c == chunk) {
                Some(p) => p,
                None => {
                    let var = *split
                        .rule
                        .get(chunks.len())
                        .ok_or_else(|| Error::Generation("span needs more variables than rule symbols".into()))?;
                    chunks.push(chunk);
                    binding.insert(var, chunk.to_vec())?;
                    chunks.len() - 1
                }
            };
            lhs.push(split.rule[slot]);
            i += len;
        }
    }
    Ok((lhs, binding))
}

/// Samples a right-hand side over `lhs_vars` and math symbols that mentions
/// at least one variable.
pub fn sample_rhs<R: RngCore + ?Sized>(
    lhs_vars: &[SymbolId],
    split: &SymbolSplit,
    config: &RewriteConfig,
    rng: &mut R,
) -> Result<Vec<SymbolId>> {
    if lhs_vars.is_empty() {
        return Err(Error::Generation("rhs needs at least one lhs variable".into()));
    }
    let pool: Vec<SymbolId> = lhs_vars.iter().chain(&split.math).copied().collect();
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let len = config.rhs_len_range.sample(rng);
        let rhs: Vec<SymbolId> = (0..len).map(|_| *pool.choose(rng).expect("nonempty")).collect();
        if rhs.iter().any(|s| lhs_vars.contains(s)) {
            return Ok(rhs);
        }
    }
    Err(Error::Generation("no rhs with a variable".into()))
}

/// Replaces `current[span]`, which must equal the instantiated lhs, by the
/// instantiated rhs.
pub fn apply_rewrite_at(
    split: &SymbolSplit,
    current: &[SymbolId],
    rule: &RewriteRule,
    span: (usize, usize),
    binding: &Substitution,
) -> Result<Vec<SymbolId>> {
    let (start, end) = span;
    let mismatch = Error::SpanMismatch { start, end };
    if start > end || end > current.len() {
        return Err(mismatch);
    }
    let lhs = apply_substitution(split, &rule.lhs, binding)?;
    if lhs != current[start..end] {
        return Err(mismatch);
    }
    let rhs = apply_substitution(split, &rule.rhs, binding)?;
    let mut out = Vec::with_capacity(current.len() - (end - start) + rhs.len());
    out.extend_from_slice(&current[..start]);
    out.extend_from_slice(&rhs);
    out.extend_from_slice(&current[end..]);
    Ok(out)
}

/// All spans of `current` with an allowed length that hold a string symbol.
pub fn candidate_spans(current: &[SymbolId], split: &SymbolSplit, span_len_range: LenRange) -> Vec<(usize, usize)> {
    let n = current.len();
    let mut spans = Vec::new();
    for len in span_len_range.min..=span_len_range.max.min(n) {
        for start in 0..=n - len {
            if current[start..start + len].iter().any(|&s| split.is_string(s)) {
                spans.push((start, start + len));
            }
        }
    }
    spans
}

/// Samples a subject and `steps_range` rewrite steps, regenerating the whole
/// instance when a step finds no usable span.
pub fn generate_rewrite<R: RngCore + ?Sized>(
    symbols: &SymbolSpaceConfig,
    config: &RewriteConfig,
    rng: &mut R,
    steps_range: LenRange,
) -> Result<RewriteInstance> {
    config.validate(symbols)?;
    'attempt: for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let split = sample_split(symbols, rng, true)?;
        let subject = sample_subject(&split, config, rng)?;
        let n_steps = steps_range.sample(rng);
        let mut current = subject.clone();
        let mut steps = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let spans = candidate_spans(&current, &split, config.span_len_range);
            let Some(&span) = spans.choose(rng) else {
                continue 'attempt;
            };
            let (lhs, binding) = abstract_span(&current, span, &split, config.binding_len_range, rng)?;
            let vars = first_occurrences(&lhs, |s| split.is_rule(s));
            let rhs = sample_rhs(&vars, &split, config, rng)?;
            let rule = RewriteRule { lhs, rhs };
            current = apply_rewrite_at(&split, &current, &rule, span, &binding)?;
            steps.push(RewriteStep { rule, span, binding });
        }
        return Ok(RewriteInstance {
            split,
            subject,
            steps,
            final_: current,
        });
    }
    Err(Error::Generation(format!(
        "no valid rewrite chain after {MAX_RESAMPLE_ATTEMPTS} attempts"
    )))
}
