//! Integer vocabulary, per-example symbol splits and deterministic RNG streams.
//!
//! Every example draws its own disjoint sets of math, rule and (for rewrite
//! tasks) string symbols from `{1, ..., S}`. Structural tokens such as `<s>`
//! or the case-map braces are encoded as non-positive integers so that no
//! sampled symbol can ever collide with syntax, whatever `S` is.

use std::collections::HashMap;
use std::fmt;

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest vocabulary the integer token encoding can represent.
pub const MAX_VOCAB_SIZE: u32 = i32::MAX as u32;

/// A vocabulary symbol, always in `[1, S]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolId(pub u32);

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reserved syntax tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structural {
    Pad,
    Unk,
    RuleMarker,
    MathMarker,
    StringMarker,
    Sep,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Eq,
}

impl Structural {
    pub const ALL: [Structural; 11] = [
        Structural::Pad,
        Structural::Unk,
        Structural::RuleMarker,
        Structural::MathMarker,
        Structural::StringMarker,
        Structural::Sep,
        Structural::LBrace,
        Structural::RBrace,
        Structural::Colon,
        Structural::Comma,
        Structural::Eq,
    ];

    /// Integer id used in JSONL output; always `<= 0`.
    pub const fn id(self) -> i32 {
        match self {
            Structural::Pad => 0,
            Structural::Unk => -1,
            Structural::RuleMarker => -2,
            Structural::MathMarker => -3,
            Structural::StringMarker => -4,
            Structural::Sep => -5,
            Structural::LBrace => -6,
            Structural::RBrace => -7,
            Structural::Colon => -8,
            Structural::Comma => -9,
            Structural::Eq => -10,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Structural::Pad => "<pad>",
            Structural::Unk => "<unk>",
            Structural::RuleMarker => "<Rule>",
            Structural::MathMarker => "<Math>",
            Structural::StringMarker => "<String>",
            Structural::Sep => "<s>",
            Structural::LBrace => "{",
            Structural::RBrace => "}",
            Structural::Colon => ":",
            Structural::Comma => ",",
            Structural::Eq => "=",
        }
    }

    pub fn from_id(id: i32) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.id() == id)
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// One position of an encoded sequence: a symbol (positive) or a structural
/// token (non-positive).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(i32);

impl Token {
    pub const SEP: Token = Token::structural(Structural::Sep);

    pub const fn structural(s: Structural) -> Self {
        Token(s.id())
    }

    pub fn symbol(id: SymbolId) -> Self {
        debug_assert!(id.0 >= 1 && id.0 <= MAX_VOCAB_SIZE);
        Token(id.0 as i32)
    }

    pub fn from_raw(raw: i32) -> Result<Self> {
        if raw > 0 || Structural::from_id(raw).is_some() {
            Ok(Token(raw))
        } else {
            Err(Error::UnknownSymbol(raw))
        }
    }

    pub const fn raw(self) -> i32 {
        self.0
    }

    pub fn as_symbol(self) -> Option<SymbolId> {
        (self.0 > 0).then_some(SymbolId(self.0 as u32))
    }

    pub fn as_structural(self) -> Option<Structural> {
        if self.0 > 0 {
            None
        } else {
            Structural::from_id(self.0)
        }
    }

    pub fn is(self, s: Structural) -> bool {
        self.0 == s.id()
    }

    /// Text-format spelling: decimal ids, literal names for syntax.
    pub fn to_text(self) -> String {
        match self.as_structural() {
            Some(s) => s.name().to_string(),
            None => self.0.to_string(),
        }
    }

    pub fn parse_text(word: &str) -> Result<Self> {
        if let Some(s) = Structural::from_name(word) {
            return Ok(Token::structural(s));
        }
        match word.parse::<u32>() {
            Ok(v) if (1..=MAX_VOCAB_SIZE).contains(&v) => Ok(Token(v as i32)),
            _ => Err(Error::config(format!("not a token: {word:?}"))),
        }
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl From<SymbolId> for Token {
    fn from(id: SymbolId) -> Self {
        Token::symbol(id)
    }
}

/// Inclusive length range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct LenRange {
    pub min: usize,
    pub max: usize,
}

impl LenRange {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min < 1 || min > max {
            return Err(Error::config(format!("invalid length range [{min}, {max}]")));
        }
        Ok(LenRange { min, max })
    }

    pub const fn contains(&self, len: usize) -> bool {
        len >= self.min && len <= self.max
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        use rand::Rng;
        rng.random_range(self.min..=self.max)
    }

    pub const fn width(&self) -> usize {
        self.max - self.min + 1
    }
}

impl TryFrom<[usize; 2]> for LenRange {
    type Error = Error;
    fn try_from(v: [usize; 2]) -> Result<Self> {
        LenRange::new(v[0], v[1])
    }
}

impl From<LenRange> for [usize; 2] {
    fn from(r: LenRange) -> Self {
        [r.min, r.max]
    }
}

impl fmt::Display for LenRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.min, self.max)
    }
}

impl std::str::FromStr for LenRange {
    type Err = Error;
    /// Accepts `LO..HI`, `LO,HI` or a single `N`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("bad length range {s:?}, expected LO..HI"));
        let (lo, hi) = match s.split_once("..").or_else(|| s.split_once(',')) {
            Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
            None => (s.trim(), s.trim()),
        };
        let lo = lo.parse().map_err(|_| bad())?;
        let hi = hi.parse().map_err(|_| bad())?;
        LenRange::new(lo, hi)
    }
}

/// How rule strings draw their tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSampling {
    /// Positions are i.i.d. over math and rule symbols, so repeats happen.
    #[default]
    WithReplacement,
    /// Every position is a different symbol.
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SymbolSpaceConfig {
    pub vocab_size: u32,
    pub n_math: usize,
    pub n_rule: usize,
    pub n_string: usize,
    pub rule_len_range: LenRange,
    pub value_len_range: LenRange,
    pub rule_sampling: RuleSampling,
}

impl Default for SymbolSpaceConfig {
    fn default() -> Self {
        SymbolSpaceConfig {
            vocab_size: 100,
            n_math: 44,
            n_rule: 24,
            n_string: 24,
            rule_len_range: LenRange { min: 5, max: 20 },
            value_len_range: LenRange { min: 2, max: 8 },
            rule_sampling: RuleSampling::WithReplacement,
        }
    }
}

impl SymbolSpaceConfig {
    pub fn with_vocab_size(vocab_size: u32) -> Self {
        SymbolSpaceConfig {
            vocab_size,
            ..Default::default()
        }
    }

    /// Number of ids a split needs.
    pub fn required_symbols(&self, with_string_class: bool) -> usize {
        self.n_math + self.n_rule + if with_string_class { self.n_string } else { 0 }
    }

    /// Checks everything except the string class, which only rewrite tasks use.
    pub fn validate(&self) -> Result<()> {
        self.validate_for(false)
    }

    pub fn validate_for(&self, with_string_class: bool) -> Result<()> {
        if self.vocab_size == 0 || self.vocab_size > MAX_VOCAB_SIZE {
            return Err(Error::config(format!("vocab_size {} out of range", self.vocab_size)));
        }
        if self.n_math == 0 || self.n_rule == 0 {
            return Err(Error::config("n_math and n_rule must be positive"));
        }
        if with_string_class && self.n_string == 0 {
            return Err(Error::config("rewrite tasks need n_string > 0"));
        }
        let need = self.required_symbols(with_string_class);
        if need > self.vocab_size as usize {
            return Err(Error::config(format!(
                "split needs {need} distinct symbols but vocab_size is {}",
                self.vocab_size
            )));
        }
        for (name, r) in [
            ("rule_len_range", self.rule_len_range),
            ("value_len_range", self.value_len_range),
        ] {
            LenRange::new(r.min, r.max).map_err(|e| Error::config(format!("{name}: {e}")))?;
        }
        if self.rule_sampling == RuleSampling::Distinct && self.rule_len_range.max > self.n_math + self.n_rule {
            return Err(Error::config(
                "distinct rule sampling needs rule_len_range.max <= n_math + n_rule",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolClass {
    Math,
    Rule,
    String,
}

/// Disjoint math / rule / string symbol sets of one example, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SymbolSplit {
    pub math: Vec<SymbolId>,
    pub rule: Vec<SymbolId>,
    #[serde(default)]
    pub string: Vec<SymbolId>,
}

impl SymbolSplit {
    /// Sorts each class and rejects overlaps or duplicates.
    pub fn new(mut math: Vec<SymbolId>, mut rule: Vec<SymbolId>, mut string: Vec<SymbolId>) -> Result<Self> {
        math.sort_unstable();
        rule.sort_unstable();
        string.sort_unstable();
        let split = SymbolSplit { math, rule, string };
        split.check()?;
        Ok(split)
    }

    /// Verifies canonical order and pairwise disjointness.
    pub fn check(&self) -> Result<()> {
        let mut all: Vec<SymbolId> = Vec::with_capacity(self.len());
        for class in [&self.math, &self.rule, &self.string] {
            if class.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config("split classes must be strictly ascending"));
            }
            if class.iter().any(|s| s.0 == 0 || s.0 > MAX_VOCAB_SIZE) {
                return Err(Error::config("symbol id out of range"));
            }
            all.extend_from_slice(class);
        }
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("split classes overlap"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.math.len() + self.rule.len() + self.string.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_of(&self, id: SymbolId) -> Option<SymbolClass> {
        if self.math.binary_search(&id).is_ok() {
            Some(SymbolClass::Math)
        } else if self.rule.binary_search(&id).is_ok() {
            Some(SymbolClass::Rule)
        } else if self.string.binary_search(&id).is_ok() {
            Some(SymbolClass::String)
        } else {
            None
        }
    }

    pub fn is_math(&self, id: SymbolId) -> bool {
        self.math.binary_search(&id).is_ok()
    }

    pub fn is_rule(&self, id: SymbolId) -> bool {
        self.rule.binary_search(&id).is_ok()
    }

    pub fn is_string(&self, id: SymbolId) -> bool {
        self.string.binary_search(&id).is_ok()
    }

    pub fn class(&self, class: SymbolClass) -> &[SymbolId] {
        match class {
            SymbolClass::Math => &self.math,
            SymbolClass::Rule => &self.rule,
            SymbolClass::String => &self.string,
        }
    }

    /// Position of `id` inside its class.
    pub fn rank(&self, id: SymbolId) -> Option<(SymbolClass, usize)> {
        for class in [SymbolClass::Math, SymbolClass::Rule, SymbolClass::String] {
            if let Ok(i) = self.class(class).binary_search(&id) {
                return Some((class, i));
            }
        }
        None
    }

    /// Applies a symbol bijection and re-sorts each class.
    pub fn relabel(&self, map: impl Fn(SymbolId) -> SymbolId) -> Result<Self> {
        SymbolSplit::new(
            self.math.iter().map(|&s| map(s)).collect(),
            self.rule.iter().map(|&s| map(s)).collect(),
            self.string.iter().map(|&s| map(s)).collect(),
        )
    }
}

/// Deterministic pseudorandom stream keyed by `(seed, label, index, sub)`.
#[derive(Debug, Clone)]
pub struct RngHandle(ChaCha8Rng);

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

pub fn derive_rng(master_seed: u64, stream_label: &str, example_index: u64) -> RngHandle {
    derive_rng_at(master_seed, stream_label, example_index, 0)
}

/// Like [`derive_rng`] with an extra retry coordinate.
pub fn derive_rng_at(master_seed: u64, stream_label: &str, example_index: u64, sub_index: u64) -> RngHandle {
    let mut h = Sha256::new();
    h.update(b"reasonsynth/rng/v1");
    h.update(master_seed.to_le_bytes());
    h.update((stream_label.len() as u64).to_le_bytes());
    h.update(stream_label.as_bytes());
    h.update(example_index.to_le_bytes());
    h.update(sub_index.to_le_bytes());
    let key: [u8; 32] = h.finalize().into();
    RngHandle(ChaCha8Rng::from_seed(key))
}

/// Samples disjoint symbol classes without replacement from `[1, S]`.
pub fn sample_split<R: RngCore + ?Sized>(
    config: &SymbolSpaceConfig,
    rng: &mut R,
    with_string_class: bool,
) -> Result<SymbolSplit> {
    config.validate_for(with_string_class)?;
    let need = config.required_symbols(with_string_class);
    let picked = index::sample(rng, config.vocab_size as usize, need);
    let mut ids = picked.iter().map(|i| SymbolId(i as u32 + 1));
    let mut take = |n: usize| {
        let mut v: Vec<SymbolId> = ids.by_ref().take(n).collect();
        v.sort_unstable();
        v
    };
    let math = take(config.n_math);
    let rule = take(config.n_rule);
    let string = if with_string_class {
        take(config.n_string)
    } else {
        Vec::new()
    };
    Ok(SymbolSplit { math, rule, string })
}

const MATH_GLYPHS: [&str; 18] = [
    "*", "+", "=", "-", "/", "(", ")", "&", "^", "!", "|", "~", "%", "$", "#", "@", "?", ";",
];
// Rewrite splits use `=` as the rule separator, so math drops it there.
const MATH_GLYPHS_REWRITE: [&str; 19] = [
    "*", "+", "-", "/", "(", ")", "&", "^", "!", "|", "~", "%", "$", "#", "@", "?", ";", "[", "]",
];
const GREEK: [&str; 24] = [
    "α", "β", "γ", "δ", "ε", "ζ", "η", "θ", "ι", "κ", "λ", "μ", "ν", "ξ", "ο", "π", "ρ", "σ", "τ", "υ", "φ", "χ", "ψ",
    "ω",
];

fn letter(base: u8, i: usize) -> Option<String> {
    (i < 26).then(|| char::from(base + i as u8).to_string())
}

/// Debug-only mapping from symbols to printable glyphs.
#[derive(Debug, Clone, Default)]
pub struct GlyphMap {
    glyphs: HashMap<SymbolId, String>,
    lookup: HashMap<String, SymbolId>,
    max_glyph_len: usize,
}

impl GlyphMap {
    /// Rule symbols become `A, B, ...`, math symbols operators then lowercase
    /// letters (Greek letters when a string class exists), string symbols
    /// lowercase letters. Everything past the tables gets an indexed name.
    pub fn for_split(split: &SymbolSplit) -> Self {
        let rewrite = !split.string.is_empty();
        let mut pairs = Vec::with_capacity(split.len());
        for (i, &s) in split.rule.iter().enumerate() {
            pairs.push((s, letter(b'A', i).unwrap_or_else(|| format!("R{i}"))));
        }
        for (i, &s) in split.math.iter().enumerate() {
            let g = if rewrite {
                MATH_GLYPHS_REWRITE
                    .get(i)
                    .map(|g| g.to_string())
                    .or_else(|| GREEK.get(i - MATH_GLYPHS_REWRITE.len()).map(|g| g.to_string()))
            } else {
                MATH_GLYPHS
                    .get(i)
                    .map(|g| g.to_string())
                    .or_else(|| letter(b'a', i - MATH_GLYPHS.len()))
            };
            pairs.push((s, g.unwrap_or_else(|| format!("m{i}"))));
        }
        for (i, &s) in split.string.iter().enumerate() {
            pairs.push((s, letter(b'a', i).unwrap_or_else(|| format!("s{i}"))));
        }
        Self::from_pairs(pairs).expect("built-in glyph tables are injective")
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (SymbolId, String)>) -> Result<Self> {
        let mut map = GlyphMap::default();
        for (id, glyph) in pairs {
            if glyph.is_empty() || glyph.chars().any(char::is_whitespace) {
                return Err(Error::config(format!("invalid glyph {glyph:?}")));
            }
            if map.lookup.insert(glyph.clone(), id).is_some() || map.glyphs.insert(id, glyph.clone()).is_some() {
                return Err(Error::config(format!("glyph {glyph:?} is not unique")));
            }
            map.max_glyph_len = map.max_glyph_len.max(glyph.len());
        }
        Ok(map)
    }

    pub fn glyph(&self, id: SymbolId) -> Option<&str> {
        self.glyphs.get(&id).map(String::as_str)
    }

    pub fn symbol(&self, glyph: &str) -> Option<SymbolId> {
        self.lookup.get(glyph).copied()
    }

    fn token_glyph(&self, t: Token) -> Result<&str> {
        match t.as_structural() {
            Some(s) => Ok(s.name()),
            None => self
                .glyphs
                .get(&t.as_symbol().expect("positive token"))
                .map(String::as_str)
                .ok_or(Error::UnknownSymbol(t.raw())),
        }
    }

    /// One glyph per token, space separated.
    pub fn render(&self, tokens: &[Token]) -> Result<String> {
        let parts = tokens
            .iter()
            .map(|&t| self.token_glyph(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.join(" "))
    }

    /// Compact view: header space separated, body strings concatenated,
    /// `<s>` padded with spaces and case entries as `{A:a, B:b}`.
    pub fn render_compact(&self, tokens: &[Token]) -> Result<String> {
        let mut out = String::new();
        let mut in_header = tokens.first().is_some_and(|t| t.is(Structural::RuleMarker));
        for &t in tokens {
            let g = self.token_glyph(t)?;
            if t.is(Structural::Sep) {
                in_header = false;
                out.push_str(" <s> ");
            } else if in_header {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(g);
            } else if t.is(Structural::Comma) {
                out.push_str(", ");
            } else {
                out.push_str(g);
            }
        }
        Ok(out.trim().to_string())
    }

    /// Inverse of [`render`](Self::render) and
    /// [`render_compact`](Self::render_compact): whitespace separates
    /// chunks, and each chunk is split by greedy longest match. Symbol
    /// glyphs win over structural names of equal length.
    pub fn tokenize(&self, text: &str) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        for chunk in text.split_whitespace() {
            let mut rest = chunk;
            while !rest.is_empty() {
                let (tok, used) = self
                    .longest_match(rest)
                    .ok_or_else(|| Error::config(format!("cannot tokenize {rest:?} (in chunk {chunk:?})")))?;
                out.push(tok);
                rest = &rest[used..];
            }
        }
        Ok(out)
    }

    fn longest_match(&self, s: &str) -> Option<(Token, usize)> {
        let limit = self.max_glyph_len.max(8).min(s.len());
        let mut ends: Vec<usize> = s
            .char_indices()
            .map(|(i, c)| i + c.len_utf8())
            .take_while(|&e| e <= limit)
            .collect();
        ends.reverse();
        for end in ends {
            let piece = &s[..end];
            if let Some(&id) = self.lookup.get(piece) {
                return Some((Token::symbol(id), end));
            }
            if let Some(st) = Structural::from_name(piece) {
                return Some((Token::structural(st), end));
            }
        }
        None
    }
}

/// Renders tokens with the split's default glyph table.
pub fn render_glyphs(tokens: &[Token], split: &SymbolSplit) -> Result<String> {
    GlyphMap::for_split(split).render(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(mut rng: RngHandle) -> Vec<u64> {
        (0..10).map(|_| rng.random()).collect()
    }

    #[test]
    fn derive_rng_is_deterministic() {
        assert_eq!(draws(derive_rng(42, "gen", 0)), draws(derive_rng(42, "gen", 0)));
    }

    #[test]
    fn derive_rng_separates_indices_seeds_and_labels() {
        let base = draws(derive_rng(42, "gen", 0));
        assert_ne!(base, draws(derive_rng(42, "gen", 1)));
        assert_ne!(draws(derive_rng(42, "gen", 7)), draws(derive_rng(43, "gen", 7)));
        assert_ne!(base, draws(derive_rng(42, "gem", 0)));
        assert_ne!(base, draws(derive_rng_at(42, "gen", 0, 1)));
        // Label length is hashed, so shifting bytes between label and index differs.
        assert_ne!(draws(derive_rng(1, "a", 0)), draws(derive_rng(1, "", 0)));
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let cfg = SymbolSpaceConfig::default();
        let split = sample_split(&cfg, &mut derive_rng(0, "t", 0), false).unwrap();
        assert_eq!(split.math.len(), 44);
        assert_eq!(split.rule.len(), 24);
        assert!(split.string.is_empty());
        split.check().unwrap();
        let mut all: Vec<_> = split.math.iter().chain(&split.rule).copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 68);
        assert!(all.iter().all(|s| (1..=100).contains(&s.0)));
    }

    #[test]
    fn tight_vocab_is_a_partition() {
        let cfg = SymbolSpaceConfig::with_vocab_size(68);
        let split = sample_split(&cfg, &mut derive_rng(5, "t", 3), false).unwrap();
        let mut all: Vec<u32> = split.math.iter().chain(&split.rule).map(|s| s.0).collect();
        all.sort();
        assert_eq!(all, (1..=68).collect::<Vec<_>>());
    }

    #[test]
    fn too_small_vocab_is_config_error() {
        let cfg = SymbolSpaceConfig::with_vocab_size(67);
        assert!(matches!(
            sample_split(&cfg, &mut derive_rng(0, "t", 0), false),
            Err(Error::Config(_))
        ));
        // The string class needs 24 more.
        let cfg = SymbolSpaceConfig::with_vocab_size(91);
        assert!(matches!(
            sample_split(&cfg, &mut derive_rng(0, "t", 0), true),
            Err(Error::Config(_))
        ));
        let cfg = SymbolSpaceConfig::with_vocab_size(92);
        assert_eq!(
            sample_split(&cfg, &mut derive_rng(0, "t", 0), true)
                .unwrap()
                .string
                .len(),
            24
        );
    }

    #[test]
    fn token_text_round_trip() {
        for s in Structural::ALL {
            let t = Token::structural(s);
            assert_eq!(Token::parse_text(&t.to_text()).unwrap(), t);
            assert_eq!(Token::from_raw(t.raw()).unwrap(), t);
            assert!(t.raw() <= 0);
        }
        assert_eq!(Token::parse_text("17").unwrap(), Token::symbol(SymbolId(17)));
        assert!(Token::parse_text("0").is_err());
        assert!(Token::from_raw(-99).is_err());
    }

    #[test]
    fn glyphs_follow_rank() {
        let split = SymbolSplit::new(
            (1..=44).map(SymbolId).collect(),
            (45..=68).map(SymbolId).collect(),
            vec![],
        )
        .unwrap();
        let g = GlyphMap::for_split(&split);
        assert_eq!(g.glyph(SymbolId(45)), Some("A"));
        assert_eq!(g.glyph(SymbolId(1)), Some("*"));
        assert_eq!(g.glyph(SymbolId(19)), Some("a"));
        assert_eq!(render_glyphs(&[Token::SEP], &split).unwrap(), "<s>");
        assert!(matches!(
            render_glyphs(&[Token::symbol(SymbolId(99))], &split),
            Err(Error::UnknownSymbol(99))
        ));
    }

    #[test]
    fn glyph_tables_are_injective_for_large_splits() {
        let cfg = SymbolSpaceConfig {
            vocab_size: 500,
            n_math: 100,
            n_rule: 40,
            n_string: 40,
            ..Default::default()
        };
        for with_string in [false, true] {
            let split = sample_split(&cfg, &mut derive_rng(1, "g", 0), with_string).unwrap();
            let g = GlyphMap::for_split(&split);
            let tokens: Vec<Token> = split
                .math
                .iter()
                .chain(&split.rule)
                .chain(&split.string)
                .map(|&s| s.into())
                .collect();
            let text = g.render(&tokens).unwrap();
            assert_eq!(g.tokenize(&text).unwrap(), tokens);
        }
    }

    #[test]
    fn len_range_parsing() {
        assert_eq!("2..8".parse::<LenRange>().unwrap(), LenRange { min: 2, max: 8 });
        assert_eq!("1,3".parse::<LenRange>().unwrap(), LenRange { min: 1, max: 3 });
        assert_eq!("5".parse::<LenRange>().unwrap(), LenRange { min: 5, max: 5 });
        assert!("8..2".parse::<LenRange>().is_err());
        assert!("0..2".parse::<LenRange>().is_err());
    }
}
