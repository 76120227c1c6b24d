//! Sequence-to-sequence encoding of triples and rewrite instances.
//!
//! Every source starts with an optional symbol header
//! `<Rule> r.. <Math> m.. [<String> s..]`, then body segments separated by
//! `<s>`. Case maps are written `{ k : v.. , k : v.. }` and rewrite rules
//! `lhs = rhs`, all with dedicated structural tokens, so the grammar never
//! depends on which integers a split happened to draw.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rewrite::{RewriteInstance, RewriteRule};
use crate::symbols::{Structural, SymbolClass, SymbolId, SymbolSplit, Token};
use crate::term::{ResultString, Substitution, TermTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Deduct,
    Abduct,
    Induct,
    InductV2,
    InductV3,
    InductRewrite,
    Rewrite,
    RewriteMultistep,
    /// Sampling directive only; never attached to an encoded example.
    Mix,
}

impl TaskKind {
    pub const CONCRETE: [TaskKind; 8] = [
        TaskKind::Deduct,
        TaskKind::Abduct,
        TaskKind::Induct,
        TaskKind::InductV2,
        TaskKind::InductV3,
        TaskKind::InductRewrite,
        TaskKind::Rewrite,
        TaskKind::RewriteMultistep,
    ];

    /// The tasks `Mix` draws from, with equal weight.
    pub const MIX: [TaskKind; 3] = [TaskKind::Deduct, TaskKind::Abduct, TaskKind::Induct];

    pub const fn name(self) -> &'static str {
        match self {
            TaskKind::Deduct => "deduct",
            TaskKind::Abduct => "abduct",
            TaskKind::Induct => "induct",
            TaskKind::InductV2 => "induct_v2",
            TaskKind::InductV3 => "induct_v3",
            TaskKind::InductRewrite => "induct_rewrite",
            TaskKind::Rewrite => "rewrite",
            TaskKind::RewriteMultistep => "rewrite_multistep",
            TaskKind::Mix => "mix",
        }
    }

    pub const fn uses_string_class(self) -> bool {
        matches!(
            self,
            TaskKind::InductRewrite | TaskKind::Rewrite | TaskKind::RewriteMultistep
        )
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TaskKind::CONCRETE
            .into_iter()
            .chain([TaskKind::Mix])
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::config(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderMode {
    #[default]
    All,
    AbductOnly,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodecOptions {
    pub header: HeaderMode,
    /// List only the symbols the example actually uses.
    pub used_only: bool,
}

impl Default for CodecOptions {
    fn default() -> Self {
        CodecOptions {
            header: HeaderMode::All,
            used_only: true,
        }
    }
}

impl CodecOptions {
    pub fn header_for(&self, task: TaskKind) -> bool {
        match self.header {
            HeaderMode::All => true,
            HeaderMode::AbductOnly => task == TaskKind::Abduct,
            HeaderMode::None => false,
        }
    }
}

/// A rule with two cases and their results, for `induct_v3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InductPair {
    pub triple: TermTriple,
    pub second_case: Substitution,
    pub second_result: ResultString,
}

/// Generated content an example is encoded from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExampleInput {
    Triple(TermTriple),
    TriplePair(InductPair),
    Rewrite(RewriteInstance),
}

impl ExampleInput {
    pub fn split(&self) -> &SymbolSplit {
        match self {
            ExampleInput::Triple(t) => &t.split,
            ExampleInput::TriplePair(p) => &p.triple.split,
            ExampleInput::Rewrite(r) => &r.split,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            ExampleInput::Triple(_) => "triple",
            ExampleInput::TriplePair(_) => "triple pair",
            ExampleInput::Rewrite(r) if r.steps.len() == 1 => "single-step rewrite",
            ExampleInput::Rewrite(_) => "multi-step rewrite",
        }
    }

    pub fn relabel(&self, map: &impl Fn(SymbolId) -> SymbolId) -> Result<Self> {
        Ok(match self {
            ExampleInput::Triple(t) => ExampleInput::Triple(t.relabel(map)?),
            ExampleInput::TriplePair(p) => ExampleInput::TriplePair(InductPair {
                triple: p.triple.relabel(map)?,
                second_case: p.second_case.relabel(map),
                second_result: ResultString(p.second_result.iter().map(|&s| map(s)).collect()),
            }),
            ExampleInput::Rewrite(r) => ExampleInput::Rewrite(r.relabel(map)?),
        })
    }
}

/// An encoded example together with the content it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqPair {
    pub task: TaskKind,
    pub source: Vec<Token>,
    pub target: Vec<Token>,
    pub input: ExampleInput,
}

/// Parsed source side of an example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceContent {
    RuleCase {
        rule: Vec<SymbolId>,
        case: Substitution,
    },
    RuleResult {
        rule: Vec<SymbolId>,
        result: Vec<SymbolId>,
    },
    CaseResult {
        case: Substitution,
        result: Vec<SymbolId>,
    },
    Result {
        result: Vec<SymbolId>,
    },
    Results {
        first: Vec<SymbolId>,
        second: Vec<SymbolId>,
    },
    Rewrite {
        subject: Vec<SymbolId>,
        rules: Vec<RewriteRule>,
    },
    Rewritten {
        subject: Vec<SymbolId>,
        rewritten: Vec<SymbolId>,
    },
}

/// Parsed target side of an example.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    /// Result (deduct), rule (induct, induct_v3) or final string (rewrite).
    Sequence(Vec<SymbolId>),
    Case(Substitution),
    RuleCase(Vec<SymbolId>, Substitution),
    Rule(RewriteRule),
}

/// The logical content an encoded example carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedExample {
    pub task: TaskKind,
    /// The header's split, or the caller's fallback when there is no header.
    pub split: SymbolSplit,
    pub has_header: bool,
    pub source: SourceContent,
    pub target: Target,
}

fn push_symbols(out: &mut Vec<Token>, symbols: &[SymbolId]) {
    out.extend(symbols.iter().map(|&s| Token::symbol(s)));
}

/// `{ k : v.. , k : v.. }` in entry order.
pub fn encode_case(case: &Substitution) -> Vec<Token> {
    let mut out = Vec::with_capacity(2 + case.iter().map(|(_, v)| v.len() + 3).sum::<usize>());
    out.push(Token::structural(Structural::LBrace));
    for (i, (k, v)) in case.iter().enumerate() {
        if i > 0 {
            out.push(Token::structural(Structural::Comma));
        }
        out.push(Token::symbol(k));
        out.push(Token::structural(Structural::Colon));
        push_symbols(&mut out, v);
    }
    out.push(Token::structural(Structural::RBrace));
    out
}

pub fn encode_rewrite_rule(rule: &RewriteRule) -> Vec<Token> {
    let mut out = Vec::with_capacity(rule.lhs.len() + rule.rhs.len() + 1);
    push_symbols(&mut out, &rule.lhs);
    out.push(Token::structural(Structural::Eq));
    push_symbols(&mut out, &rule.rhs);
    out
}

/// `<Rule> .. <Math> ..` plus `<String> ..` when that class is nonempty.
pub fn encode_header(split: &SymbolSplit) -> Vec<Token> {
    let mut out = Vec::with_capacity(split.len() + 3);
    out.push(Token::structural(Structural::RuleMarker));
    push_symbols(&mut out, &split.rule);
    out.push(Token::structural(Structural::MathMarker));
    push_symbols(&mut out, &split.math);
    if !split.string.is_empty() {
        out.push(Token::structural(Structural::StringMarker));
        push_symbols(&mut out, &split.string);
    }
    out
}

/// Restricts `split` to the symbols occurring in `seqs`.
pub fn used_split(split: &SymbolSplit, seqs: &[&[Token]]) -> SymbolSplit {
    let mut used = SymbolSplit::default();
    for seq in seqs {
        for s in seq.iter().filter_map(|t| t.as_symbol()) {
            let class = match split.class_of(s) {
                Some(SymbolClass::Math) => &mut used.math,
                Some(SymbolClass::Rule) => &mut used.rule,
                Some(SymbolClass::String) => &mut used.string,
                None => continue,
            };
            class.push(s);
        }
    }
    for class in [&mut used.math, &mut used.rule, &mut used.string] {
        class.sort_unstable();
        class.dedup();
    }
    used
}

fn join_segments(segments: Vec<Vec<Token>>) -> Vec<Token> {
    let mut out = Vec::with_capacity(segments.iter().map(|s| s.len() + 1).sum());
    for (i, seg) in segments.into_iter().enumerate() {
        if i > 0 {
            out.push(Token::SEP);
        }
        out.extend(seg);
    }
    out
}

fn symbols(s: &[SymbolId]) -> Vec<Token> {
    s.iter().map(|&x| Token::symbol(x)).collect()
}

/// Body segments and target tokens, before any header.
fn encode_body(input: &ExampleInput, task: TaskKind) -> Result<(Vec<Vec<Token>>, Vec<Token>)> {
    let mismatch = || Error::TaskMismatch {
        task: task.name().to_string(),
        input: input.kind_name(),
    };
    Ok(match (task, input) {
        (TaskKind::Deduct, ExampleInput::Triple(t)) => {
            (vec![symbols(&t.rule), encode_case(&t.case)], symbols(&t.result))
        }
        (TaskKind::Abduct, ExampleInput::Triple(t)) => {
            (vec![symbols(&t.rule), symbols(&t.result)], encode_case(&t.case))
        }
        (TaskKind::Induct, ExampleInput::Triple(t)) => {
            (vec![encode_case(&t.case), symbols(&t.result)], symbols(&t.rule))
        }
        (TaskKind::InductV2, ExampleInput::Triple(t)) => (
            vec![symbols(&t.result)],
            join_segments(vec![symbols(&t.rule), encode_case(&t.case)]),
        ),
        (TaskKind::InductV3, ExampleInput::TriplePair(p)) => (
            vec![symbols(&p.triple.result), symbols(&p.second_result)],
            symbols(&p.triple.rule),
        ),
        (TaskKind::Rewrite, ExampleInput::Rewrite(r)) | (TaskKind::RewriteMultistep, ExampleInput::Rewrite(r))
            if !r.steps.is_empty() && (task == TaskKind::RewriteMultistep || r.steps.len() == 1) =>
        {
            let mut segs = vec![symbols(&r.subject)];
            segs.extend(r.steps.iter().map(|s| encode_rewrite_rule(&s.rule)));
            (segs, symbols(&r.final_))
        }
        (TaskKind::InductRewrite, ExampleInput::Rewrite(r)) if r.steps.len() == 1 => (
            vec![symbols(&r.subject), symbols(&r.final_)],
            encode_rewrite_rule(&r.steps[0].rule),
        ),
        _ => return Err(mismatch()),
    })
}

fn header_split(input: &ExampleInput, opts: &CodecOptions, seqs: &[&[Token]]) -> SymbolSplit {
    if opts.used_only {
        used_split(input.split(), seqs)
    } else {
        input.split().clone()
    }
}

/// Encodes `input` as a `task` example.
pub fn encode_example(input: &ExampleInput, task: TaskKind, opts: &CodecOptions) -> Result<SeqPair> {
    let (segments, target) = encode_body(input, task)?;
    let body = join_segments(segments);
    let source = if opts.header_for(task) {
        let split = header_split(input, opts, &[&body, &target]);
        let mut s = encode_header(&split);
        s.push(Token::SEP);
        s.extend(body);
        s
    } else {
        body
    };
    Ok(SeqPair {
        task,
        source,
        target,
        input: input.clone(),
    })
}

/// What [`decode_example`] returns for an encoding of `input`.
pub fn project(input: &ExampleInput, task: TaskKind, opts: &CodecOptions) -> Result<DecodedExample> {
    let (segments, target_tokens) = encode_body(input, task)?;
    let has_header = opts.header_for(task);
    let split = if has_header {
        let body = join_segments(segments);
        header_split(input, opts, &[&body, &target_tokens])
    } else {
        input.split().clone()
    };
    let (source, target) = match (task, input) {
        (TaskKind::Deduct, ExampleInput::Triple(t)) => (
            SourceContent::RuleCase {
                rule: t.rule.0.clone(),
                case: t.case.clone(),
            },
            Target::Sequence(t.result.0.clone()),
        ),
        (TaskKind::Abduct, ExampleInput::Triple(t)) => (
            SourceContent::RuleResult {
                rule: t.rule.0.clone(),
                result: t.result.0.clone(),
            },
            Target::Case(t.case.clone()),
        ),
        (TaskKind::Induct, ExampleInput::Triple(t)) => (
            SourceContent::CaseResult {
                case: t.case.clone(),
                result: t.result.0.clone(),
            },
            Target::Sequence(t.rule.0.clone()),
        ),
        (TaskKind::InductV2, ExampleInput::Triple(t)) => (
            SourceContent::Result {
                result: t.result.0.clone(),
            },
            Target::RuleCase(t.rule.0.clone(), t.case.clone()),
        ),
        (TaskKind::InductV3, ExampleInput::TriplePair(p)) => (
            SourceContent::Results {
                first: p.triple.result.0.clone(),
                second: p.second_result.0.clone(),
            },
            Target::Sequence(p.triple.rule.0.clone()),
        ),
        (TaskKind::Rewrite | TaskKind::RewriteMultistep, ExampleInput::Rewrite(r)) => (
            SourceContent::Rewrite {
                subject: r.subject.clone(),
                rules: r.steps.iter().map(|s| s.rule.clone()).collect(),
            },
            Target::Sequence(r.final_.clone()),
        ),
        (TaskKind::InductRewrite, ExampleInput::Rewrite(r)) => (
            SourceContent::Rewritten {
                subject: r.subject.clone(),
                rewritten: r.final_.clone(),
            },
            Target::Rule(r.steps[0].rule.clone()),
        ),
        _ => unreachable!("encode_body accepted the combination"),
    };
    Ok(DecodedExample {
        task,
        split,
        has_header,
        source,
        target,
    })
}

struct Cursor<'a> {
    part: &'static str,
    tokens: &'a [Token],
    /// Offset of `tokens[0]` within the full sequence.
    base: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, at: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.part, self.base + at, msg)
    }

    fn symbols(&self, split: &SymbolSplit) -> Result<Vec<SymbolId>> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| match t.as_symbol() {
                Some(s) if split.class_of(s).is_some() => Ok(s),
                Some(s) => Err(self.err(i, format!("symbol {s} is not declared in the split"))),
                None => Err(self.err(i, format!("unexpected {:?}", t))),
            })
            .collect()
    }

    fn case(&self, split: &SymbolSplit) -> Result<Substitution> {
        let t = self.tokens;
        if !t.first().is_some_and(|x| x.is(Structural::LBrace)) {
            return Err(self.err(0, "expected '{'"));
        }
        let mut case = Substitution::new();
        let mut i = 1;
        if t.get(1).is_some_and(|x| x.is(Structural::RBrace)) {
            i = 2;
        } else {
            loop {
                let key = match t.get(i).and_then(|x| x.as_symbol()) {
                    Some(k) if split.is_rule(k) => k,
                    Some(k) => return Err(self.err(i, format!("case key {k} is not a rule symbol"))),
                    None if i >= t.len() => return Err(self.err(i, "unclosed '{'")),
                    None => return Err(self.err(i, "expected a case key")),
                };
                if !t.get(i + 1).is_some_and(|x| x.is(Structural::Colon)) {
                    return Err(self.err(
                        i + 1,
                        if i + 1 >= t.len() {
                            "unclosed '{'"
                        } else {
                            "expected ':'"
                        },
                    ));
                }
                i += 2;
                let start = i;
                while i < t.len() && t[i].as_symbol().is_some() {
                    i += 1;
                }
                if i == start {
                    return Err(self.err(i, "empty case value"));
                }
                let value = Cursor {
                    part: self.part,
                    tokens: &t[start..i],
                    base: self.base + start,
                }
                .symbols(split)?;
                if case.get(key).is_some() {
                    return Err(self.err(start - 2, format!("duplicate case key {key}")));
                }
                case.insert(key, value)?;
                match t.get(i).and_then(|x| x.as_structural()) {
                    Some(Structural::Comma) => i += 1,
                    Some(Structural::RBrace) => {
                        i += 1;
                        break;
                    }
                    _ if i >= t.len() => return Err(self.err(i, "unclosed '{'")),
                    _ => return Err(self.err(i, "expected ',' or '}'")),
                }
            }
        }
        if i != t.len() {
            return Err(self.err(i, "trailing tokens after '}'"));
        }
        Ok(case)
    }

    fn rewrite_rule(&self, split: &SymbolSplit) -> Result<RewriteRule> {
        let eqs: Vec<usize> = self
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is(Structural::Eq))
            .map(|(i, _)| i)
            .collect();
        match eqs.as_slice() {
            [eq] => Ok(RewriteRule {
                lhs: self.slice(0, *eq).symbols(split)?,
                rhs: self.slice(eq + 1, self.tokens.len()).symbols(split)?,
            }),
            [] => Err(self.err(self.tokens.len(), "rewrite rule without '='")),
            [_, second, ..] => Err(self.err(*second, "second '=' in rewrite rule")),
        }
    }

    fn slice(&self, a: usize, b: usize) -> Cursor<'a> {
        Cursor {
            part: self.part,
            tokens: &self.tokens[a..b],
            base: self.base + a,
        }
    }

    /// Splits on `<s>`.
    fn segments(&self) -> Vec<Cursor<'a>> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.is(Structural::Sep) {
                out.push(self.slice(start, i));
                start = i + 1;
            }
        }
        out.push(self.slice(start, self.tokens.len()));
        out
    }
}

/// Parses a leading header; returns the split and the offset just past its `<s>`.
fn decode_header(source: &[Token]) -> Result<Option<(SymbolSplit, usize)>> {
    if !source.first().is_some_and(|t| t.is(Structural::RuleMarker)) {
        return Ok(None);
    }
    let err = |at: usize, msg: &str| Error::parse("source", at, msg);
    let mut classes: [Vec<SymbolId>; 3] = Default::default();
    let markers = [Structural::RuleMarker, Structural::MathMarker, Structural::StringMarker];
    let mut i = 0;
    let mut class = 0;
    loop {
        // source[i] is the marker of `class`
        i += 1;
        while let Some(s) = source.get(i).and_then(|t| t.as_symbol()) {
            if classes[class].last().is_some_and(|&p| p >= s) {
                return Err(err(i, "header symbols must be strictly ascending"));
            }
            classes[class].push(s);
            i += 1;
        }
        let next = source.get(i).and_then(|t| t.as_structural());
        match (class, next) {
            (0, Some(Structural::MathMarker)) | (1, Some(Structural::StringMarker)) => class += 1,
            (1 | 2, Some(Structural::Sep)) => break,
            (0, _) => return Err(err(i, "expected <Math> after the rule symbols")),
            _ => return Err(err(i, "expected <s> after the header")),
        }
        debug_assert!(source[i].is(markers[class]));
    }
    let [rule, math, string] = classes;
    let split = SymbolSplit { math, rule, string };
    split.check().map_err(|e| err(0, &e.to_string()))?;
    Ok(Some((split, i + 1)))
}

/// Parses the source side. Without a header the fallback split is required.
pub fn decode_source(
    source: &[Token],
    task: TaskKind,
    fallback: Option<&SymbolSplit>,
) -> Result<(SymbolSplit, bool, SourceContent)> {
    let (split, body_start, has_header) = match decode_header(source)? {
        Some((split, at)) => (split, at, true),
        None => match fallback {
            Some(s) => (s.clone(), 0, false),
            None => return Err(Error::parse("source", 0, "no symbol header and no split supplied")),
        },
    };
    let body = Cursor {
        part: "source",
        tokens: &source[body_start..],
        base: body_start,
    };
    let segs = body.segments();
    let expect = |n: usize| -> Result<()> {
        if segs.len() == n {
            Ok(())
        } else if segs.len() > n {
            Err(body.err(
                segs[n].base - body.base - 1,
                format!("{task} source has more than {n} segments"),
            ))
        } else {
            Err(body.err(
                body.tokens.len(),
                format!("{task} source needs {n} segments, found {}", segs.len()),
            ))
        }
    };
    let content = match task {
        TaskKind::Deduct => {
            expect(2)?;
            SourceContent::RuleCase {
                rule: segs[0].symbols(&split)?,
                case: segs[1].case(&split)?,
            }
        }
        TaskKind::Abduct => {
            expect(2)?;
            SourceContent::RuleResult {
                rule: segs[0].symbols(&split)?,
                result: segs[1].symbols(&split)?,
            }
        }
        TaskKind::Induct => {
            expect(2)?;
            SourceContent::CaseResult {
                case: segs[0].case(&split)?,
                result: segs[1].symbols(&split)?,
            }
        }
        TaskKind::InductV2 => {
            expect(1)?;
            SourceContent::Result {
                result: segs[0].symbols(&split)?,
            }
        }
        TaskKind::InductV3 => {
            expect(2)?;
            SourceContent::Results {
                first: segs[0].symbols(&split)?,
                second: segs[1].symbols(&split)?,
            }
        }
        TaskKind::Rewrite | TaskKind::RewriteMultistep => {
            if task == TaskKind::Rewrite {
                expect(2)?;
            } else if segs.len() < 2 {
                return Err(body.err(
                    body.tokens.len(),
                    "rewrite source needs a subject and at least one rule",
                ));
            }
            SourceContent::Rewrite {
                subject: segs[0].symbols(&split)?,
                rules: segs[1..]
                    .iter()
                    .map(|c| c.rewrite_rule(&split))
                    .collect::<Result<_>>()?,
            }
        }
        TaskKind::InductRewrite => {
            expect(2)?;
            SourceContent::Rewritten {
                subject: segs[0].symbols(&split)?,
                rewritten: segs[1].symbols(&split)?,
            }
        }
        TaskKind::Mix => return Err(Error::config("mix is not a concrete task")),
    };
    Ok((split, has_header, content))
}

pub fn decode_target(target: &[Token], task: TaskKind, split: &SymbolSplit) -> Result<Target> {
    let cur = Cursor {
        part: "target",
        tokens: target,
        base: 0,
    };
    Ok(match task {
        TaskKind::Deduct | TaskKind::Induct | TaskKind::InductV3 | TaskKind::Rewrite | TaskKind::RewriteMultistep => {
            Target::Sequence(cur.symbols(split)?)
        }
        TaskKind::Abduct => Target::Case(cur.case(split)?),
        TaskKind::InductV2 => {
            let segs = cur.segments();
            if segs.len() != 2 {
                return Err(cur.err(target.len(), "induct_v2 target is `rule <s> case`"));
            }
            Target::RuleCase(segs[0].symbols(split)?, segs[1].case(split)?)
        }
        TaskKind::InductRewrite => Target::Rule(cur.rewrite_rule(split)?),
        TaskKind::Mix => return Err(Error::config("mix is not a concrete task")),
    })
}

pub fn decode_example(
    source: &[Token],
    target: &[Token],
    task: TaskKind,
    fallback: Option<&SymbolSplit>,
) -> Result<DecodedExample> {
    let (split, has_header, source) = decode_source(source, task, fallback)?;
    let target = decode_target(target, task, &split)?;
    Ok(DecodedExample {
        task,
        split,
        has_header,
        source,
        target,
    })
}

/// Target tokens for a decoded or solved target.
pub fn encode_target(target: &Target) -> Vec<Token> {
    match target {
        Target::Sequence(s) => symbols(s),
        Target::Case(c) => encode_case(c),
        Target::RuleCase(r, c) => join_segments(vec![symbols(r), encode_case(c)]),
        Target::Rule(r) => encode_rewrite_rule(r),
    }
}

/// Recovers the task of an example from its shape. A one-rule multi-step
/// rewrite is indistinguishable from `rewrite` and reported as such.
pub fn infer_task(source: &[Token], target: &[Token]) -> Result<TaskKind> {
    let body_start = match decode_header(source)? {
        Some((_, at)) => at,
        None => 0,
    };
    let body = &source[body_start..];
    let has = |seq: &[Token], s: Structural| seq.iter().any(|t| t.is(s));
    if has(target, Structural::Eq) {
        return Ok(TaskKind::InductRewrite);
    }
    if target.first().is_some_and(|t| t.is(Structural::LBrace)) {
        return Ok(TaskKind::Abduct);
    }
    if has(target, Structural::Sep) {
        return Ok(TaskKind::InductV2);
    }
    let segs: Vec<&[Token]> = body.split(|t| t.is(Structural::Sep)).collect();
    let rules = segs.iter().skip(1).filter(|s| has(s, Structural::Eq)).count();
    let is_case = |s: &[Token]| s.first().is_some_and(|t| t.is(Structural::LBrace));
    Ok(match segs.as_slice() {
        _ if rules > 1 => TaskKind::RewriteMultistep,
        _ if rules == 1 => TaskKind::Rewrite,
        [_, second] if is_case(second) => TaskKind::Deduct,
        [first, _] if is_case(first) => TaskKind::Induct,
        [_, _] => TaskKind::InductV3,
        _ => {
            return Err(Error::parse(
                "source",
                0,
                "cannot infer the task from the example shape",
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::GlyphMap;

    fn split() -> SymbolSplit {
        SymbolSplit::new(
            (1..=44).map(SymbolId).collect(),
            (45..=68).map(SymbolId).collect(),
            vec![],
        )
        .unwrap()
    }

    fn glyphs() -> GlyphMap {
        GlyphMap::for_split(&split())
    }

    fn syms(text: &str) -> Vec<SymbolId> {
        glyphs()
            .tokenize(text)
            .unwrap()
            .into_iter()
            .map(|t| t.as_symbol().unwrap())
            .collect()
    }

    fn worked_case() -> Substitution {
        let g = glyphs();
        Substitution::from_entries(vec![
            (g.symbol("A").unwrap(), syms("a")),
            (g.symbol("B").unwrap(), syms("b")),
            (g.symbol("C").unwrap(), syms("d+e")),
        ])
        .unwrap()
    }

    #[test]
    fn case_glyphs() {
        let g = glyphs();
        assert_eq!(
            g.render(&encode_case(&worked_case())).unwrap(),
            "{ A : a , B : b , C : d + e }"
        );
        let single = Substitution::from_entries(vec![(g.symbol("A").unwrap(), syms("xy"))]).unwrap();
        assert_eq!(g.render(&encode_case(&single)).unwrap(), "{ A : x y }");
    }

    #[test]
    fn used_only_header_and_full_header() {
        let g = glyphs();
        let body = g.tokenize("A*A+B=C <s> a*a+b=d+e").unwrap();
        let used = used_split(&split(), &[&body]);
        assert_eq!(
            g.render(&encode_header(&used)).unwrap(),
            "<Rule> A B C <Math> * + = a b d e"
        );
        let full = encode_header(&split());
        assert_eq!(full.iter().filter(|t| t.as_symbol().is_some()).count(), 68);
        assert!(!full.iter().any(|t| t.is(Structural::StringMarker)));
    }

    #[test]
    fn missing_math_marker_reports_offset() {
        let g = glyphs();
        let src = g.tokenize("<Rule> A B <s> A+B <s> a+b").unwrap();
        match decode_source(&src, TaskKind::Abduct, None) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_case_is_unclosed() {
        let g = glyphs();
        let tgt = g.tokenize("{ A : a").unwrap();
        let err = decode_target(&tgt, TaskKind::Abduct, &split()).unwrap_err();
        assert!(err.to_string().contains("unclosed"), "{err}");
        for bad in ["{ A a }", "{ A : }", "{ a : b }", "{ A : a } b", "{ A : a , A : b }"] {
            assert!(
                decode_target(&g.tokenize(bad).unwrap(), TaskKind::Abduct, &split()).is_err(),
                "{bad}"
            );
        }
        assert_eq!(
            decode_target(&g.tokenize("{ }").unwrap(), TaskKind::Abduct, &split()).unwrap(),
            Target::Case(Substitution::new())
        );
    }

    #[test]
    fn wrong_input_kind_is_task_mismatch() {
        let t = TermTriple {
            split: split(),
            rule: syms("A+b").into(),
            case: Substitution::new(),
            result: syms("a+b").into(),
        };
        let err = encode_example(&ExampleInput::Triple(t), TaskKind::Rewrite, &CodecOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TaskMismatch { .. }));
    }

    #[test]
    fn rule_without_variables_encodes_verbatim() {
        let rule = syms("a+b");
        let t = TermTriple {
            split: split(),
            rule: rule.clone().into(),
            case: Substitution::new(),
            result: rule.clone().into(),
        };
        let pair = encode_example(&ExampleInput::Triple(t), TaskKind::Deduct, &CodecOptions::default()).unwrap();
        assert_eq!(pair.target, symbols(&rule));
    }

    #[test]
    fn header_modes() {
        let g = glyphs();
        let t = TermTriple {
            split: split(),
            rule: syms("A*A+B=C").into(),
            case: worked_case(),
            result: syms("a*a+b=d+e").into(),
        };
        let input = ExampleInput::Triple(t);
        let none = CodecOptions {
            header: HeaderMode::None,
            used_only: true,
        };
        let pair = encode_example(&input, TaskKind::Abduct, &none).unwrap();
        assert_eq!(g.render_compact(&pair.source).unwrap(), "A*A+B=C <s> a*a+b=d+e");
        assert!(decode_example(&pair.source, &pair.target, TaskKind::Abduct, None).is_err());
        let d = decode_example(&pair.source, &pair.target, TaskKind::Abduct, Some(&split())).unwrap();
        assert_eq!(d, project(&input, TaskKind::Abduct, &none).unwrap());

        let only = CodecOptions {
            header: HeaderMode::AbductOnly,
            used_only: false,
        };
        assert!(encode_example(&input, TaskKind::Abduct, &only).unwrap().source[0].is(Structural::RuleMarker));
        assert!(!encode_example(&input, TaskKind::Deduct, &only).unwrap().source[0].is(Structural::RuleMarker));
    }

    #[test]
    fn task_names_round_trip() {
        for t in TaskKind::CONCRETE.into_iter().chain([TaskKind::Mix]) {
            assert_eq!(t.name().parse::<TaskKind>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
    }
}
