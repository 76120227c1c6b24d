//! Generation, encoding and verification of synthetic symbolic reasoning
//! corpora built from rule strings, substitutions and rewrite rules.

pub mod codec;
pub mod error;
pub mod oracle;
pub mod pipeline;
pub mod rewrite;
pub mod symbols;
pub mod term;

pub use codec::{
    decode_example, decode_source, decode_target, encode_example, infer_task, project, CodecOptions, DecodedExample,
    ExampleInput, HeaderMode, InductPair, SeqPair, SourceContent, Target, TaskKind,
};
pub use error::{Error, Result};
pub use oracle::{solve_source, verify_decoded, verify_example, OracleBounds, SolutionSet, VerificationReport};
pub use rewrite::{generate_rewrite, RewriteConfig, RewriteInstance, RewriteRule, RewriteStep};
pub use symbols::{
    derive_rng, derive_rng_at, sample_split, GlyphMap, LenRange, RngHandle, RuleSampling, Structural, SymbolClass,
    SymbolId, SymbolSpaceConfig, SymbolSplit, Token,
};
pub use term::{apply_substitution, generate_triple, ResultString, RuleString, Substitution, TermTriple};
