//! Example records and their on-disk forms.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::OutputFormat;
use crate::codec::{infer_task, ExampleInput, InductPair, SeqPair, TaskKind};
use crate::error::{Error, Result};
use crate::rewrite::{RewriteInstance, RewriteStep};
use crate::symbols::{SymbolId, SymbolSplit, Token};
use crate::term::{ResultString, RuleString, Substitution, TermTriple};

/// A generated example with its place in the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleRecord {
    pub stage: String,
    /// Generation coordinate within the stage.
    pub index: u64,
    /// Position in the whole corpus.
    pub global_index: u64,
    /// Regenerations needed at this index.
    pub retry: u64,
    pub pair: SeqPair,
    pub n_solutions: Option<usize>,
    pub truncated: Option<bool>,
}

/// Generated content as stored in JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Meta {
    Rewrite {
        subject: Vec<SymbolId>,
        steps: Vec<RewriteStep>,
        #[serde(rename = "final")]
        final_: Vec<SymbolId>,
        intermediates: Vec<Vec<SymbolId>>,
    },
    TriplePair {
        rule: RuleString,
        case: Substitution,
        result: ResultString,
        second_case: Substitution,
        second_result: ResultString,
    },
    Triple {
        rule: RuleString,
        case: Substitution,
        result: ResultString,
    },
}

impl Meta {
    pub fn from_input(input: &ExampleInput) -> Result<Self> {
        Ok(match input {
            ExampleInput::Triple(t) => Meta::Triple {
                rule: t.rule.clone(),
                case: t.case.clone(),
                result: t.result.clone(),
            },
            ExampleInput::TriplePair(p) => Meta::TriplePair {
                rule: p.triple.rule.clone(),
                case: p.triple.case.clone(),
                result: p.triple.result.clone(),
                second_case: p.second_case.clone(),
                second_result: p.second_result.clone(),
            },
            ExampleInput::Rewrite(r) => {
                let mut intermediates = r.replay()?;
                intermediates.pop();
                Meta::Rewrite {
                    subject: r.subject.clone(),
                    steps: r.steps.clone(),
                    final_: r.final_.clone(),
                    intermediates,
                }
            }
        })
    }

    pub fn into_input(self, split: SymbolSplit) -> ExampleInput {
        match self {
            Meta::Triple { rule, case, result } => ExampleInput::Triple(TermTriple {
                split,
                rule,
                case,
                result,
            }),
            Meta::TriplePair {
                rule,
                case,
                result,
                second_case,
                second_result,
            } => ExampleInput::TriplePair(InductPair {
                triple: TermTriple {
                    split,
                    rule,
                    case,
                    result,
                },
                second_case,
                second_result,
            }),
            Meta::Rewrite {
                subject, steps, final_, ..
            } => ExampleInput::Rewrite(RewriteInstance {
                split,
                subject,
                steps,
                final_,
            }),
        }
    }
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonRecord {
    pub task: TaskKind,
    pub stage: String,
    pub index: u64,
    pub global_index: u64,
    pub retry: u64,
    pub source: Vec<Token>,
    pub target: Vec<Token>,
    /// The example's full symbol split, whatever the header lists.
    pub split_header: SymbolSplit,
    pub meta: Meta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_solutions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
}

impl ExampleRecord {
    pub fn to_json(&self) -> Result<JsonRecord> {
        Ok(JsonRecord {
            task: self.pair.task,
            stage: self.stage.clone(),
            index: self.index,
            global_index: self.global_index,
            retry: self.retry,
            source: self.pair.source.clone(),
            target: self.pair.target.clone(),
            split_header: self.pair.input.split().clone(),
            meta: Meta::from_input(&self.pair.input)?,
            n_solutions: self.n_solutions,
            truncated: self.truncated,
        })
    }
}

/// An example read back from disk. Text corpora carry no meta, so the task
/// is inferred and `input` is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedExample {
    pub stage: Option<String>,
    pub position: u64,
    pub task: TaskKind,
    pub source: Vec<Token>,
    pub target: Vec<Token>,
    pub input: Option<ExampleInput>,
    pub n_solutions: Option<usize>,
    pub truncated: Option<bool>,
}

impl LoadedExample {
    pub fn split(&self) -> Option<&SymbolSplit> {
        self.input.as_ref().map(|i| i.split())
    }
}

impl From<JsonRecord> for LoadedExample {
    fn from(r: JsonRecord) -> Self {
        LoadedExample {
            stage: Some(r.stage),
            position: r.global_index,
            task: r.task,
            source: r.source,
            target: r.target,
            input: Some(r.meta.into_input(r.split_header)),
            n_solutions: r.n_solutions,
            truncated: r.truncated,
        }
    }
}

pub fn format_tokens(tokens: &[Token]) -> String {
    let mut out = String::with_capacity(tokens.len() * 4);
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.to_text());
    }
    out
}

pub fn parse_tokens(line: &str) -> Result<Vec<Token>> {
    line.split_whitespace()
        .enumerate()
        .map(|(i, w)| Token::parse_text(w).map_err(|_| Error::parse("line", i, format!("not a token: {w:?}"))))
        .collect()
}

/// Writer that hashes everything passing through it.
pub struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        HashingWriter {
            inner,
            hasher: Sha256::new(),
            bytes: 0,
        }
    }

    /// Flushes and returns the hex SHA-256 and byte count.
    pub fn finish(mut self) -> io::Result<(String, u64)> {
        self.inner.flush()?;
        Ok((hex::encode(self.hasher.finalize()), self.bytes))
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the corpus root.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes records of one format to a fixed set of files.
pub struct RecordWriter {
    format: OutputFormat,
    files: Vec<(String, HashingWriter<BufWriter<File>>)>,
}

impl RecordWriter {
    /// Creates `<dir>/<stem>.src` and `.tgt`, or `<dir>/<stem>.jsonl`.
    pub fn create(root: &Path, rel_dir: &str, stem: &str, format: OutputFormat) -> Result<Self> {
        let dir = if rel_dir.is_empty() {
            root.to_path_buf()
        } else {
            root.join(rel_dir)
        };
        std::fs::create_dir_all(&dir)?;
        let exts: &[&str] = match format {
            OutputFormat::Text => &["src", "tgt"],
            OutputFormat::Jsonl => &["jsonl"],
        };
        let mut files = Vec::new();
        for ext in exts {
            let name = format!("{stem}.{ext}");
            let rel = if rel_dir.is_empty() {
                name.clone()
            } else {
                format!("{rel_dir}/{name}")
            };
            let f = File::create(dir.join(&name))?;
            files.push((rel, HashingWriter::new(BufWriter::new(f))));
        }
        Ok(RecordWriter { format, files })
    }

    pub fn write(&mut self, record: &ExampleRecord) -> Result<()> {
        match self.format {
            OutputFormat::Text => {
                writeln!(self.files[0].1, "{}", format_tokens(&record.pair.source))?;
                writeln!(self.files[1].1, "{}", format_tokens(&record.pair.target))?;
            }
            OutputFormat::Jsonl => {
                let line = serde_json::to_string(&record.to_json()?)?;
                writeln!(self.files[0].1, "{line}")?;
            }
        }
        Ok(())
    }

    /// Writes an already loaded example in this writer's format.
    pub fn write_loaded(&mut self, ex: &LoadedExample, json: Option<&JsonRecord>) -> Result<()> {
        match (self.format, json) {
            (OutputFormat::Jsonl, Some(j)) => writeln!(self.files[0].1, "{}", serde_json::to_string(j)?)?,
            (OutputFormat::Jsonl, None) => return Err(Error::config("text examples cannot be written as JSONL")),
            (OutputFormat::Text, _) => {
                writeln!(self.files[0].1, "{}", format_tokens(&ex.source))?;
                writeln!(self.files[1].1, "{}", format_tokens(&ex.target))?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<Vec<FileDigest>> {
        self.files
            .into_iter()
            .map(|(path, w)| {
                let (sha256, bytes) = w.finish()?;
                Ok(FileDigest { path, sha256, bytes })
            })
            .collect()
    }
}

fn lines(path: &Path) -> Result<impl Iterator<Item = io::Result<String>>> {
    Ok(BufReader::new(File::open(path)?).lines())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<JsonRecord>> {
    let mut out = Vec::new();
    for (n, line) in lines(path)?.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse("jsonl", n, format!("{}: line {}: {e}", path.display(), n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads a `.src` file and its `.tgt` sibling. Tasks are inferred unless
/// `task` is given.
pub fn read_text_pair(
    src: &Path,
    stage: Option<&str>,
    task: Option<TaskKind>,
    first_position: u64,
) -> Result<Vec<LoadedExample>> {
    let tgt = src.with_extension("tgt");
    let sources: Vec<String> = lines(src)?.collect::<io::Result<_>>()?;
    let targets: Vec<String> = lines(&tgt)?.collect::<io::Result<_>>()?;
    if sources.len() != targets.len() {
        return Err(Error::parse(
            "text",
            sources.len().min(targets.len()),
            format!("{} and {} differ in line count", src.display(), tgt.display()),
        ));
    }
    sources
        .iter()
        .zip(&targets)
        .enumerate()
        .map(|(i, (s, t))| {
            let source = parse_tokens(s)?;
            let target = parse_tokens(t)?;
            let task = match task {
                Some(t) => t,
                None => infer_task(&source, &target)?,
            };
            Ok(LoadedExample {
                stage: stage.map(str::to_string),
                position: first_position + i as u64,
                task,
                source,
                target,
                input: None,
                n_solutions: None,
                truncated: None,
            })
        })
        .collect()
}

/// A corpus on disk: its manifest when present and its examples in order.
pub struct LoadedCorpus {
    pub manifest: Option<super::manifest::CorpusManifest>,
    pub examples: Vec<LoadedExample>,
    /// Raw JSONL records, parallel to `examples`, for JSONL corpora.
    pub json: Option<Vec<JsonRecord>>,
}

/// Reads a corpus directory (with `manifest.json`), a `.jsonl` file, or a
/// `.src` file paired with its `.tgt`.
pub fn read_corpus(path: &Path) -> Result<LoadedCorpus> {
    if !path.exists() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no such file or directory", path.display()),
        )
        .into());
    }
    if path.is_dir() {
        let manifest = super::manifest::CorpusManifest::load(&path.join(super::manifest::MANIFEST_FILE))?;
        let mut examples = Vec::new();
        let mut json = Vec::new();
        for stage in &manifest.stages {
            for file in &stage.files {
                let p = path.join(&file.path);
                match p.extension().and_then(|e| e.to_str()) {
                    Some("jsonl") => {
                        for r in read_jsonl(&p)? {
                            json.push(r.clone());
                            examples.push(r.into());
                        }
                    }
                    Some("src") => {
                        let first = examples.len() as u64;
                        // single-task stages need no inference
                        let weights = stage.stage.effective_weights();
                        let task = (weights.len() == 1).then(|| weights[0].0);
                        examples.extend(read_text_pair(&p, Some(&stage.stage.stage_name), task, first)?);
                    }
                    _ => {}
                }
            }
        }
        let json = (manifest.format == OutputFormat::Jsonl).then_some(json);
        return Ok(LoadedCorpus {
            manifest: Some(manifest),
            examples,
            json,
        });
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => {
            let json = read_jsonl(path)?;
            let examples = json.iter().cloned().map(Into::into).collect();
            Ok(LoadedCorpus {
                manifest: None,
                examples,
                json: Some(json),
            })
        }
        Some("src") | Some("tgt") => {
            let src: PathBuf = path.with_extension("src");
            Ok(LoadedCorpus {
                manifest: None,
                examples: read_text_pair(&src, None, None, 0)?,
                json: None,
            })
        }
        _ => Err(Error::config(format!(
            "{}: expected a corpus directory, a .jsonl file or a .src/.tgt pair",
            path.display()
        ))),
    }
}

/// 128-bit content fingerprint of an encoded example.
pub fn fingerprint(source: &[Token], target: &[Token]) -> u128 {
    let mut h = Sha256::new();
    h.update((source.len() as u64).to_le_bytes());
    for t in source {
        h.update(t.raw().to_le_bytes());
    }
    for t in target {
        h.update(t.raw().to_le_bytes());
    }
    let d = h.finalize();
    u128::from_le_bytes(d[..16].try_into().expect("digest is 32 bytes"))
}
