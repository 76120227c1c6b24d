use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::OutputFormat;
use super::record::{fingerprint, read_corpus, FileDigest, LoadedExample, RecordWriter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Valid,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Valid, Partition::Test];

    pub const fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Valid => "valid",
            Partition::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.98,
            valid: 0.01,
            test: 0.01,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let f = SplitFractions { train, valid, test };
        let parts = [train, valid, test];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "split fractions must be nonnegative and sum to 1, got {parts:?}"
            )));
        }
        Ok(f)
    }
}

/// Assigns by a seeded hash of the example's content, so identical examples
/// always land in the same partition.
pub fn assign_partition(example_fingerprint: u128, seed: u64, fractions: &SplitFractions) -> Partition {
    let mut h = Sha256::new();
    h.update(b"reasonsynth/split/v1");
    h.update(seed.to_le_bytes());
    h.update(example_fingerprint.to_le_bytes());
    let d = h.finalize();
    let x = u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"));
    let u = (x >> 11) as f64 / (1u64 << 53) as f64;
    if u < fractions.train {
        Partition::Train
    } else if u < fractions.train + fractions.valid {
        Partition::Valid
    } else {
        Partition::Test
    }
}

/// Positions of `examples` in each partition, in corpus order.
pub fn split_examples(
    examples: &[LoadedExample],
    seed: u64,
    fractions: &SplitFractions,
) -> BTreeMap<Partition, Vec<usize>> {
    let mut out: BTreeMap<Partition, Vec<usize>> = Partition::ALL.iter().map(|&p| (p, Vec::new())).collect();
    for (i, ex) in examples.iter().enumerate() {
        let p = assign_partition(fingerprint(&ex.source, &ex.target), seed, fractions);
        out.get_mut(&p).expect("all partitions present").push(i);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub seed: u64,
    pub fractions: SplitFractions,
    pub counts: BTreeMap<Partition, u64>,
    pub files: Vec<FileDigest>,
}

/// Writes `train`, `valid` and `test` files under `out` in the corpus's
/// own format (JSONL corpora stay JSONL).
pub fn split_corpus(input: &Path, out: &Path, fractions: &SplitFractions, seed: u64) -> Result<SplitReport> {
    let corpus = read_corpus(input)?;
    let format = if corpus.json.is_some() {
        OutputFormat::Jsonl
    } else {
        OutputFormat::Text
    };
    let parts = split_examples(&corpus.examples, seed, fractions);
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut counts = BTreeMap::new();
    for (part, positions) in &parts {
        let mut w = RecordWriter::create(out, "", part.name(), format)?;
        for &i in positions {
            w.write_loaded(&corpus.examples[i], corpus.json.as_ref().map(|j| &j[i]))?;
        }
        files.extend(w.finish()?);
        counts.insert(*part, positions.len() as u64);
    }
    let report = SplitReport {
        seed,
        fractions: *fractions,
        counts,
        files,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(out.join("split.json"), text)?;
    Ok(report)
}
