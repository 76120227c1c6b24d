use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use reasonsynth_core::codec::{decode_example, decode_source, encode_target};
use reasonsynth_core::pipeline::record::format_tokens;
use reasonsynth_core::pipeline::{
    corpus_stats, read_corpus, split_corpus, GeneratorConfig, LoadedCorpus, LoadedExample, SplitFractions,
};
use reasonsynth_core::{
    solve_source, verify_decoded, Error, GlyphMap, OracleBounds, SymbolId, SymbolSpaceConfig, SymbolSplit, TaskKind,
    Token,
};
use serde::Serialize;

use crate::{config_error, parse_task, BoundsArgs, VerifyFailed};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Corpus directory, `.jsonl` file or `.src`/`.tgt` pair.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write one JSON line per example here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ReportLine {
    position: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<String>,
    task: TaskKind,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_is_solution: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    in_enumeration: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_solutions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Bounds of the stage an example came from, or the defaults.
fn bounds_for(corpus: &LoadedCorpus, ex: &LoadedExample, args: &BoundsArgs) -> OracleBounds {
    let cfg = corpus
        .manifest
        .as_ref()
        .zip(ex.stage.as_deref())
        .and_then(|(m, name)| m.stage(name))
        .map(|s| s.stage.config.clone())
        .unwrap_or_default();
    args.apply(cfg.bounds())
}

fn verify_one(corpus: &LoadedCorpus, ex: &LoadedExample, args: &BoundsArgs) -> ReportLine {
    let mut line = ReportLine {
        position: ex.position,
        stage: ex.stage.clone(),
        task: ex.task,
        valid: false,
        target_is_solution: None,
        in_enumeration: None,
        n_solutions: None,
        truncated: None,
        error: None,
    };
    let outcome = decode_example(&ex.source, &ex.target, ex.task, ex.split())
        .and_then(|d| verify_decoded(&d, &bounds_for(corpus, ex, args)));
    match outcome {
        Ok(r) => {
            line.valid = r.valid;
            line.target_is_solution = Some(r.target_is_solution);
            line.in_enumeration = r.in_enumeration;
            line.n_solutions = Some(r.n_solutions);
            line.truncated = Some(r.truncated);
        }
        Err(e) => line.error = Some(e.to_string()),
    }
    line
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(0) => Err(config_error("--jobs must be positive")),
        Some(j) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| config_error(e.to_string()))?
            .install(f)),
        None => Ok(f()),
    }
}

pub fn verify(args: VerifyArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let lines: Vec<ReportLine> = with_jobs(args.jobs, || {
        corpus
            .examples
            .par_iter()
            .map(|ex| verify_one(&corpus, ex, &args.bounds))
            .collect()
    })?;
    if let Some(path) = &args.report {
        let mut w = BufWriter::new(std::fs::File::create(path).map_err(Error::Io)?);
        for l in &lines {
            serde_json::to_writer(&mut w, l)?;
            w.write_all(b"\n").map_err(Error::Io)?;
        }
        w.flush().map_err(Error::Io)?;
    }
    let mut histogram: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    let mut truncated = 0;
    for l in &lines {
        if let (Some(n), Some(t)) = (l.n_solutions, l.truncated) {
            let entry = histogram.entry(n).or_default();
            if t {
                entry.1 += 1;
                truncated += 1;
            } else {
                entry.0 += 1;
            }
        }
    }
    let failures: Vec<&ReportLine> = lines.iter().filter(|l| !l.valid).collect();
    let total = lines.len();
    let rate = if total == 0 {
        100.0
    } else {
        100.0 * (total - failures.len()) as f64 / total as f64
    };
    println!("examples: {total}");
    println!("valid: {} ({rate:.3}%)", total - failures.len());
    println!("failures: {}", failures.len());
    println!("truncated enumerations: {truncated}");
    let hist: Vec<String> = histogram
        .iter()
        .flat_map(|(n, (exact, trunc))| {
            let a = (*exact > 0).then(|| format!("{n}:{exact}"));
            let b = (*trunc > 0).then(|| format!(">={n}:{trunc}"));
            a.into_iter().chain(b)
        })
        .collect();
    println!("solutions: {}", hist.join(" "));
    for f in &failures {
        let why = f
            .error
            .clone()
            .unwrap_or_else(|| match (f.target_is_solution, f.in_enumeration) {
                (Some(false), _) => "target is not a solution".into(),
                _ => "target missing from the complete enumeration".into(),
            });
        println!("FAIL {} {}: {why}", f.position, f.task);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(VerifyFailed(failures.len() as u64).into())
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_parser = parse_task)]
    pub task: TaskKind,
    /// Source as glyphs (`<Rule> A <Math> + a <s> A+A <s> a+a`) or as
    /// integer tokens (`-2 45 -3 2 20 -5 45 2 45 -5 20 2 20`).
    #[arg(long, allow_hyphen_values = true)]
    pub source: String,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    /// Print solutions as integer tokens instead of glyphs.
    #[arg(long)]
    pub ids: bool,
}

/// The split glyph sources are read against: default class sizes, math
/// symbols first, then rule symbols, then string symbols.
fn glyph_split(task: TaskKind) -> SymbolSplit {
    let cfg = SymbolSpaceConfig::default();
    let ids = |from: usize, n: usize| (from..from + n).map(|i| SymbolId(i as u32)).collect::<Vec<_>>();
    let math = ids(1, cfg.n_math);
    let rule = ids(1 + cfg.n_math, cfg.n_rule);
    let string = if task.uses_string_class() {
        ids(1 + cfg.n_math + cfg.n_rule, cfg.n_string)
    } else {
        vec![]
    };
    SymbolSplit::new(math, rule, string).expect("disjoint ranges")
}

pub fn solve(args: SolveArgs) -> Result<()> {
    if args.task == TaskKind::Mix {
        return Err(config_error("solve needs a concrete task"));
    }
    let words: Vec<&str> = args.source.split_whitespace().collect();
    let numeric: Option<Vec<Token>> = words.iter().map(|w| Token::parse_text(w).ok()).collect();
    let (tokens, fallback, glyphs) = match numeric {
        Some(tokens) => (tokens, None, None),
        None => {
            let split = glyph_split(args.task);
            let g = GlyphMap::for_split(&split);
            (g.tokenize(&args.source)?, Some(split), Some(g))
        }
    };
    let (split, _, content) = decode_source(&tokens, args.task, fallback.as_ref())?;
    let bounds = args.bounds.apply(GeneratorConfig::default().bounds());
    let set = solve_source(args.task, &split, &content, &bounds)?;
    let glyphs = glyphs.unwrap_or_else(|| GlyphMap::for_split(&split));
    for s in &set.solutions {
        let t = encode_target(s);
        if args.ids {
            println!("{}", format_tokens(&t));
        } else {
            println!("{}", glyphs.render_compact(&t)?);
        }
    }
    let label = set.count_label();
    println!("{label} solution{}", if label == "1" { "" } else { "s" });
    Ok(())
}

#[derive(Args, Debug)]
pub struct ShowArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Corpus position of the first example to print.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub index: i64,
    /// Number of examples to print.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Also print a glyph rendering.
    #[arg(long)]
    pub glyphs: bool,
    /// Also print the generation meta (JSONL corpora only).
    #[arg(long)]
    pub meta: bool,
}

pub fn show(args: ShowArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let n = corpus.examples.len();
    let start = usize::try_from(args.index)
        .ok()
        .filter(|&i| i < n)
        .ok_or_else(|| config_error(format!("index {} is out of range for {n} examples", args.index)))?;
    for i in start..(start + args.count.max(1)).min(n) {
        let ex = &corpus.examples[i];
        match &ex.stage {
            Some(stage) => println!("#{} {} (stage {stage})", ex.position, ex.task),
            None => println!("#{} {}", ex.position, ex.task),
        }
        println!("source: {}", format_tokens(&ex.source));
        println!("target: {}", format_tokens(&ex.target));
        if args.glyphs {
            // glyphs follow the split the source itself declares
            let (split, _, _) = decode_source(&ex.source, ex.task, ex.split())?;
            let g = GlyphMap::for_split(&split);
            println!("source glyphs: {}", g.render_compact(&ex.source)?);
            println!("target glyphs: {}", g.render_compact(&ex.target)?);
        }
        if args.meta {
            match corpus.json.as_ref().map(|j| &j[i]) {
                Some(rec) => println!("meta: {}", serde_json::to_string(&rec.meta)?),
                None => println!("meta: none (text corpus)"),
            }
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Print the full report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let corpus = read_corpus(&args.input)?;
    let report = corpus_stats(&corpus.examples, corpus.manifest.as_ref());
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &args.out {
        std::fs::write(path, format!("{text}\n")).map_err(Error::Io)?;
    }
    if args.json {
        println!("{text}");
        return Ok(());
    }
    println!("examples: {}", report.n_examples);
    for (task, count) in &report.task_counts {
        println!("  {task}: {count}");
    }
    println!(
        "source length: mean {:.2}, max {}",
        report.mean_source_len, report.max_source_len
    );
    println!(
        "target length: mean {:.2}, max {}",
        report.mean_target_len, report.max_target_len
    );
    println!("distinct symbols: {}", report.symbol_usage.len());
    if let Some(rate) = report.dedup_rate {
        println!("dedup rate: {rate:.5}");
    }
    if let Some(h) = &report.ambiguity {
        let parts: Vec<String> = h.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        println!("solutions: {}", parts.join(" "));
    }
    println!(
        "fidelity: {} checked, {} violations",
        report.fidelity.checked,
        report.fidelity.total_violations()
    );
    for (kind, count) in &report.fidelity.violations {
        println!("  {kind}: {count}");
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.98)]
    pub train: f64,
    #[arg(long, default_value_t = 0.01)]
    pub valid: f64,
    #[arg(long, default_value_t = 0.01)]
    pub test: f64,
}

pub fn split(args: SplitArgs) -> Result<()> {
    let fractions = SplitFractions::new(args.train, args.valid, args.test)?;
    let report = split_corpus(&args.input, &args.out, &fractions, args.seed)?;
    for (part, count) in &report.counts {
        println!("{}: {count}", part.name());
    }
    Ok(())
}
