//! `reasonsynth`: generate, verify, solve, inspect and split synthetic
//! reasoning corpora.
//!
//! Exit codes: 0 success, 2 configuration or parse error, 3 I/O error,
//! 4 generation exhausted, 5 verification failure.

mod gen;
mod inspect;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reasonsynth_core::{Error, LenRange, OracleBounds, TaskKind};
use serde::de::DeserializeOwned;

#[derive(Parser, Debug)]
#[command(
    name = "reasonsynth",
    version,
    about = "Synthetic deduction, abduction, induction and rewriting corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a corpus and its manifest.
    Gen(gen::GenArgs),
    /// Check every example of a corpus against the exact solvers.
    Verify(inspect::VerifyArgs),
    /// Enumerate the solutions of a single source.
    Solve(inspect::SolveArgs),
    /// Print examples of a corpus.
    Show(inspect::ShowArgs),
    /// Length, task, symbol and fidelity statistics of a corpus.
    Stats(inspect::StatsArgs),
    /// Partition a corpus into train, valid and test files by content hash.
    Split(inspect::SplitArgs),
}

/// Returned when a corpus fails verification.
#[derive(Debug)]
pub struct VerifyFailed(pub u64);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} example(s) failed verification", self.0)
    }
}

impl std::error::Error for VerifyFailed {}

/// Solver bounds shared by `verify` and `solve`; unset fields keep the
/// generation config's values.
#[derive(Args, Debug, Clone, Default)]
pub struct BoundsArgs {
    /// Most solutions to enumerate per example.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Value length range for abduction, as LO..HI.
    #[arg(long)]
    pub value_len: Option<LenRange>,
    /// Rule length range for induction, as LO..HI.
    #[arg(long)]
    pub rule_len: Option<LenRange>,
    /// Search node budget per solver call.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Let induced rules leave case keys unused.
    #[arg(long)]
    pub allow_unused_keys: bool,
}

impl BoundsArgs {
    pub fn apply(&self, mut b: OracleBounds) -> OracleBounds {
        if let Some(cap) = self.cap {
            b.cap = cap;
        }
        if let Some(r) = self.value_len {
            b.value_len = r;
        }
        if let Some(r) = self.rule_len {
            b.rule_len = r;
        }
        if let Some(n) = self.budget {
            b.budget = n;
        }
        b.allow_unused_keys |= self.allow_unused_keys;
        b
    }
}

/// Parses a snake_case (or kebab-case) enum value through its serde names.
pub fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| format!("invalid value {s:?}"))
}

pub fn parse_task(s: &str) -> Result<TaskKind, String> {
    s.parse::<TaskKind>().map_err(|e| e.to_string())
}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

pub fn read_json<T: DeserializeOwned>(path: &PathBuf) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(Error::Io)?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<VerifyFailed>() {
            return 5;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_) => 3,
                Error::Generation(_) => 4,
                _ => 2,
            };
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
        if cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen::run(a),
        Command::Verify(a) => inspect::verify(a),
        Command::Solve(a) => inspect::solve(a),
        Command::Show(a) => inspect::show(a),
        Command::Stats(a) => inspect::stats(a),
        Command::Split(a) => inspect::split(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
