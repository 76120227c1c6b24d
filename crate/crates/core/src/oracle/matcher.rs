//! Backtracking matcher for patterns of literals and variables.

use std::ops::ControlFlow;

use crate::symbols::{LenRange, SymbolId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    Lit(SymbolId),
    Var(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Pattern {
    items: Vec<Item>,
    /// Variable symbols in first-occurrence order; `Var(i)` refers to `vars[i]`.
    pub(crate) vars: Vec<SymbolId>,
    suffix_min: Vec<usize>,
    suffix_max: Vec<usize>,
}

impl Pattern {
    pub(crate) fn compile(pattern: &[SymbolId], is_var: impl Fn(SymbolId) -> bool, value_len: LenRange) -> Self {
        let mut vars: Vec<SymbolId> = Vec::new();
        let items: Vec<Item> = pattern
            .iter()
            .map(|&s| {
                if !is_var(s) {
                    return Item::Lit(s);
                }
                let idx = vars.iter().position(|&v| v == s).unwrap_or_else(|| {
                    vars.push(s);
                    vars.len() - 1
                });
                Item::Var(idx)
            })
            .collect();
        let mut suffix_min = vec![0; items.len() + 1];
        let mut suffix_max = vec![0usize; items.len() + 1];
        for k in (0..items.len()).rev() {
            let (lo, hi) = match items[k] {
                Item::Lit(_) => (1, 1),
                Item::Var(_) => (value_len.min, value_len.max),
            };
            suffix_min[k] = suffix_min[k + 1] + lo;
            suffix_max[k] = suffix_max[k + 1].saturating_add(hi);
        }
        Pattern {
            items,
            vars,
            suffix_min,
            suffix_max,
        }
    }
}

pub(crate) struct Matcher<'a> {
    pub(crate) pattern: &'a Pattern,
    pub(crate) text: &'a [SymbolId],
    pub(crate) value_len: LenRange,
    pub(crate) value_ok: &'a dyn Fn(&[SymbolId]) -> bool,
    /// Distinct variables must take distinct values.
    pub(crate) injective: bool,
    /// The match must end at the end of `text`.
    pub(crate) anchored: bool,
}

/// Match callback: end position and the range bound to each variable.
type OnMatch<'f> = dyn FnMut(usize, &[(usize, usize)]) -> ControlFlow<()> + 'f;

impl Matcher<'_> {
    /// Calls `on_match(end, bindings)` for every match starting at `start`,
    /// where `bindings[i]` is the text range bound to variable `i`.
    pub(crate) fn for_each(&self, start: usize, on_match: &mut OnMatch) -> ControlFlow<()> {
        let mut bind = vec![(0usize, 0usize); self.pattern.vars.len()];
        let mut bound = vec![false; self.pattern.vars.len()];
        self.rec(0, start, &mut bind, &mut bound, on_match)
    }

    fn rec(
        &self,
        k: usize,
        pos: usize,
        bind: &mut [(usize, usize)],
        bound: &mut [bool],
        on_match: &mut OnMatch,
    ) -> ControlFlow<()> {
        let rest = self.text.len() - pos;
        if rest < self.pattern.suffix_min[k] || (self.anchored && rest > self.pattern.suffix_max[k]) {
            return ControlFlow::Continue(());
        }
        let Some(&item) = self.pattern.items.get(k) else {
            if self.anchored && rest != 0 {
                return ControlFlow::Continue(());
            }
            return on_match(pos, bind);
        };
        match item {
            Item::Lit(s) => {
                if self.text[pos] == s {
                    return self.rec(k + 1, pos + 1, bind, bound, on_match);
                }
            }
            Item::Var(v) if bound[v] => {
                let (a, b) = bind[v];
                let len = b - a;
                if len <= rest && self.text[pos..pos + len] == self.text[a..b] {
                    return self.rec(k + 1, pos + len, bind, bound, on_match);
                }
            }
            Item::Var(v) => {
                for len in self.value_len.min.max(1)..=self.value_len.max.min(rest) {
                    let value = &self.text[pos..pos + len];
                    if !(self.value_ok)(value) {
                        continue;
                    }
                    if self.injective && (0..bind.len()).any(|w| bound[w] && self.text[bind[w].0..bind[w].1] == *value)
                    {
                        continue;
                    }
                    bind[v] = (pos, pos + len);
                    bound[v] = true;
                    let flow = self.rec(k + 1, pos + len, bind, bound, on_match);
                    bound[v] = false;
                    flow?;
                }
            }
        }
        ControlFlow::Continue(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<SymbolId> {
        v.iter().map(|&x| SymbolId(x)).collect()
    }

    fn count(
        pattern: &[u32],
        text: &[u32],
        range: LenRange,
        anchored: bool,
        injective: bool,
    ) -> Vec<(usize, Vec<(usize, usize)>)> {
        let pat = Pattern::compile(&ids(pattern), |s| s.0 >= 100, range);
        let text = ids(text);
        let m = Matcher {
            pattern: &pat,
            text: &text,
            value_len: range,
            value_ok: &|_| true,
            injective,
            anchored,
        };
        let mut out = Vec::new();
        for start in 0..=text.len() {
            let _ = m.for_each(start, &mut |end, b| {
                out.push((end, b.to_vec()));
                ControlFlow::Continue(())
            });
            if anchored {
                break;
            }
        }
        out
    }

    #[test]
    fn two_variables_segment_a_string() {
        let r = LenRange { min: 2, max: 8 };
        assert_eq!(count(&[100, 101], &[1, 2, 3, 4, 5], r, true, false).len(), 2);
        let r1 = LenRange { min: 1, max: 8 };
        assert_eq!(count(&[100, 101], &[1, 2, 3, 4, 5], r1, true, false).len(), 4);
    }

    #[test]
    fn repeated_variable_must_agree() {
        let r = LenRange { min: 1, max: 8 };
        // A + A against "ab+ab" with '+' = 9
        let hits = count(&[100, 9, 100], &[1, 2, 9, 1, 2], r, true, false);
        assert_eq!(hits, vec![(5, vec![(0, 2)])]);
    }

    #[test]
    fn injective_rejects_equal_values() {
        let r = LenRange { min: 1, max: 1 };
        assert_eq!(count(&[100, 101], &[1, 1], r, true, false).len(), 1);
        assert_eq!(count(&[100, 101], &[1, 1], r, true, true).len(), 0);
    }

    #[test]
    fn unanchored_finds_every_site() {
        let r = LenRange { min: 1, max: 1 };
        // A + A over "a+a+a": sites at 0 and 2
        let hits = count(&[100, 9, 100], &[1, 9, 1, 9, 1], r, false, false);
        assert_eq!(hits.len(), 2);
    }
}
