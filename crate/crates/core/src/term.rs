//! Rule / Case / Result triples and the substitution that ties them together.

use std::ops::Deref;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::{sample_split, RuleSampling, SymbolId, SymbolSpaceConfig, SymbolSplit};

/// Attempts allowed for any rejection-sampling loop before giving up.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 1000;

macro_rules! symbol_string {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<SymbolId>);

        impl Deref for $name {
            type Target = [SymbolId];
            fn deref(&self) -> &[SymbolId] {
                &self.0
            }
        }

        impl From<Vec<SymbolId>> for $name {
            fn from(v: Vec<SymbolId>) -> Self {
                $name(v)
            }
        }
    };
}

symbol_string!(
    /// A rule: math and rule symbols, at least one of the latter.
    RuleString
);
symbol_string!(
    /// The outcome of substituting a case into a rule; math symbols only.
    ResultString
);

/// Ordered map from rule symbols to math-symbol strings (the Case).
///
/// Serialized as a list of `[key, [values...]]` pairs to keep the order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Substitution {
    entries: Vec<(SymbolId, Vec<SymbolId>)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from ordered entries, rejecting duplicate keys.
    pub fn from_entries(entries: Vec<(SymbolId, Vec<SymbolId>)>) -> Result<Self> {
        let mut s = Substitution::new();
        for (k, v) in entries {
            s.insert(k, v)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, key: SymbolId, value: Vec<SymbolId>) -> Result<()> {
        if self.get(key).is_some() {
            return Err(Error::config(format!("duplicate substitution key {key}")));
        }
        self.entries.push((key, value));
        Ok(())
    }

    pub fn get(&self, key: SymbolId) -> Option<&[SymbolId]> {
        self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_slice())
    }

    pub fn keys(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.entries.iter().map(|(k, _)| *k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SymbolId, &[SymbolId])> + '_ {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same entries regardless of order.
    pub fn same_mapping(&self, other: &Substitution) -> bool {
        self.len() == other.len() && self.iter().all(|(k, v)| other.get(k) == Some(v))
    }

    pub fn relabel(&self, map: &impl Fn(SymbolId) -> SymbolId) -> Self {
        Substitution {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (map(*k), v.iter().map(|&s| map(s)).collect()))
                .collect(),
        }
    }
}

/// Distinct symbols of `tokens` satisfying `pred`, in first-occurrence order.
pub fn first_occurrences(tokens: &[SymbolId], pred: impl Fn(SymbolId) -> bool) -> Vec<SymbolId> {
    let mut seen: Vec<SymbolId> = Vec::new();
    for &t in tokens {
        if pred(t) && !seen.contains(&t) {
            seen.push(t);
        }
    }
    seen
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermTriple {
    pub split: SymbolSplit,
    pub rule: RuleString,
    pub case: Substitution,
    pub result: ResultString,
}

impl TermTriple {
    /// Checks every structural invariant of a generated triple.
    pub fn check(&self, config: &SymbolSpaceConfig) -> Result<(), String> {
        let split = &self.split;
        if !config.rule_len_range.contains(self.rule.len()) {
            return Err(format!(
                "rule length {} outside {}",
                self.rule.len(),
                config.rule_len_range
            ));
        }
        if let Some(s) = self.rule.iter().find(|&&s| !split.is_math(s) && !split.is_rule(s)) {
            return Err(format!("rule token {s} is neither math nor rule"));
        }
        let used = first_occurrences(&self.rule, |s| split.is_rule(s));
        if used.is_empty() {
            return Err("rule has no rule symbol".into());
        }
        let keys: Vec<SymbolId> = self.case.keys().collect();
        if keys != used {
            return Err("case keys differ from the rule's rule symbols in first-occurrence order".into());
        }
        for (_, v) in self.case.iter() {
            if !config.value_len_range.contains(v.len()) {
                return Err(format!("value length {} outside {}", v.len(), config.value_len_range));
            }
            if v.iter().any(|&s| !split.is_math(s)) {
                return Err("case value contains a non-math symbol".into());
            }
        }
        if self.result.iter().any(|&s| !split.is_math(s)) {
            return Err("result contains a non-math symbol".into());
        }
        let expected = apply_substitution(split, &self.rule, &self.case).map_err(|e| e.to_string())?;
        if expected != self.result.0 {
            return Err("result differs from the substituted rule".into());
        }
        Ok(())
    }

    pub fn relabel(&self, map: &impl Fn(SymbolId) -> SymbolId) -> Result<Self> {
        Ok(TermTriple {
            split: self.split.relabel(map)?,
            rule: RuleString(self.rule.iter().map(|&s| map(s)).collect()),
            case: self.case.relabel(map),
            result: ResultString(self.result.iter().map(|&s| map(s)).collect()),
        })
    }
}

/// Samples a rule string, resampling until it holds a rule symbol.
pub fn sample_rule<R: RngCore + ?Sized>(
    split: &SymbolSplit,
    config: &SymbolSpaceConfig,
    rng: &mut R,
) -> Result<RuleString> {
    if split.math.is_empty() || split.rule.is_empty() {
        return Err(Error::Generation("split needs math and rule symbols".into()));
    }
    let pool: Vec<SymbolId> = split.math.iter().chain(&split.rule).copied().collect();
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let len = config.rule_len_range.sample(rng);
        let tokens: Vec<SymbolId> = match config.rule_sampling {
            RuleSampling::WithReplacement => (0..len).map(|_| *pool.choose(rng).expect("nonempty")).collect(),
            RuleSampling::Distinct => {
                if len > pool.len() {
                    return Err(Error::config("rule length exceeds the number of available symbols"));
                }
                pool.choose_multiple(rng, len).copied().collect()
            }
        };
        if tokens.iter().any(|&s| split.is_rule(s)) {
            return Ok(RuleString(tokens));
        }
    }
    Err(Error::Generation(format!(
        "no rule with a rule symbol after {MAX_RESAMPLE_ATTEMPTS} attempts"
    )))
}

/// One value per distinct rule symbol in `rule`, in first-occurrence order.
pub fn sample_substitution<R: RngCore + ?Sized>(
    rule: &[SymbolId],
    split: &SymbolSplit,
    config: &SymbolSpaceConfig,
    rng: &mut R,
) -> Substitution {
    let mut case = Substitution::new();
    for key in first_occurrences(rule, |s| split.is_rule(s)) {
        let len = config.value_len_range.sample(rng);
        let value = (0..len)
            .map(|_| *split.math.choose(rng).expect("nonempty math set"))
            .collect();
        case.entries.push((key, value));
    }
    case
}

/// Replaces every rule-symbol occurrence of `rule` by its value in one pass.
pub fn apply_substitution(split: &SymbolSplit, rule: &[SymbolId], case: &Substitution) -> Result<Vec<SymbolId>> {
    let mut out = Vec::with_capacity(rule.len() * 4);
    for &s in rule {
        if split.is_rule(s) {
            out.extend_from_slice(case.get(s).ok_or(Error::MissingBinding(s.0))?);
        } else {
            out.push(s);
        }
    }
    Ok(out)
}

/// Split, rule, case and result for one example.
pub fn generate_triple<R: RngCore + ?Sized>(config: &SymbolSpaceConfig, rng: &mut R) -> Result<TermTriple> {
    let split = sample_split(config, rng, false)?;
    let rule = sample_rule(&split, config, rng)?;
    let case = sample_substitution(&rule, &split, config, rng);
    let result = ResultString(apply_substitution(&split, &rule, &case)?);
    Ok(TermTriple {
        split,
        rule,
        case,
        result,
    })
}

/// A uniformly random permutation of `[1, vocab_size]`, as a lookup table.
pub fn random_bijection<R: RngCore + ?Sized>(vocab_size: u32, rng: &mut R) -> Vec<SymbolId> {
    let mut table: Vec<SymbolId> = (1..=vocab_size).map(SymbolId).collect();
    table.shuffle(rng);
    // index 0 is unused so `table[id]` works directly
    table.insert(0, SymbolId(0));
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{derive_rng, LenRange};

    fn ids(v: &[u32]) -> Vec<SymbolId> {
        v.iter().map(|&i| SymbolId(i)).collect()
    }

    /// math 1..=10, rule 11..=13
    fn small_split() -> SymbolSplit {
        SymbolSplit::new(ids(&(1..=10).collect::<Vec<_>>()), ids(&[11, 12, 13]), vec![]).unwrap()
    }

    #[test]
    fn substitution_of_two_variables() {
        // rule "AB", case {A: xy, B: yx} -> "xyyx"
        let split = small_split();
        let (a, b, x, y) = (11, 12, 1, 2);
        let case = Substitution::from_entries(vec![(SymbolId(a), ids(&[x, y])), (SymbolId(b), ids(&[y, x]))]).unwrap();
        let out = apply_substitution(&split, &ids(&[a, b]), &case).unwrap();
        assert_eq!(out, ids(&[x, y, y, x]));
    }

    #[test]
    fn rule_without_variables_is_identity() {
        let split = small_split();
        let rule = ids(&[1, 2, 3]);
        assert_eq!(apply_substitution(&split, &rule, &Substitution::new()).unwrap(), rule);
    }

    #[test]
    fn missing_binding_is_reported() {
        let split = small_split();
        let case = Substitution::from_entries(vec![(SymbolId(11), ids(&[1]))]).unwrap();
        assert!(matches!(
            apply_substitution(&split, &ids(&[11, 12]), &case),
            Err(Error::MissingBinding(12))
        ));
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(Substitution::from_entries(vec![(SymbolId(11), ids(&[1])), (SymbolId(11), ids(&[2]))]).is_err());
    }

    #[test]
    fn case_keys_follow_first_occurrence() {
        let split = small_split();
        let cfg = SymbolSpaceConfig::default();
        // "C A C B A"
        let rule = ids(&[13, 1, 11, 13, 12, 11]);
        let case = sample_substitution(&rule, &split, &cfg, &mut derive_rng(0, "t", 0));
        assert_eq!(case.keys().collect::<Vec<_>>(), ids(&[13, 11, 12]));
        let single = ids(&[11, 1, 11, 2, 11, 11]);
        assert_eq!(
            sample_substitution(&single, &split, &cfg, &mut derive_rng(0, "t", 1)).len(),
            1
        );
    }

    #[test]
    fn degenerate_rule_length() {
        let cfg = SymbolSpaceConfig {
            rule_len_range: LenRange::new(5, 5).unwrap(),
            ..Default::default()
        };
        for i in 0..200 {
            let t = generate_triple(&cfg, &mut derive_rng(3, "t", i)).unwrap();
            assert_eq!(t.rule.len(), 5);
            t.check(&cfg).unwrap();
        }
    }

    #[test]
    fn distinct_sampling_has_no_repeats() {
        let cfg = SymbolSpaceConfig {
            rule_sampling: RuleSampling::Distinct,
            ..Default::default()
        };
        for i in 0..200 {
            let t = generate_triple(&cfg, &mut derive_rng(4, "t", i)).unwrap();
            let mut r = t.rule.0.clone();
            r.sort();
            r.dedup();
            assert_eq!(r.len(), t.rule.len());
            t.check(&cfg).unwrap();
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SymbolSpaceConfig::default();
        let a = generate_triple(&cfg, &mut derive_rng(0, "gen", 0)).unwrap();
        let b = generate_triple(&cfg, &mut derive_rng(0, "gen", 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rule_sampling_needs_both_classes() {
        let split = SymbolSplit::new(ids(&[1, 2]), vec![], vec![]).unwrap();
        let cfg = SymbolSpaceConfig::default();
        assert!(sample_rule(&split, &cfg, &mut derive_rng(0, "t", 0)).is_err());
    }

    #[test]
    fn bijection_is_a_permutation() {
        let t = random_bijection(50, &mut derive_rng(0, "b", 0));
        let mut v: Vec<u32> = t[1..].iter().map(|s| s.0).collect();
        v.sort();
        assert_eq!(v, (1..=50).collect::<Vec<_>>());
    }
}
