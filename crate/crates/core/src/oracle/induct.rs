//! Anti-substitution: enumerate the rules that instantiate to given results.
//!
//! Several results ("tracks") can be explained jointly by one rule. Variables
//! are either fixed (each has a known value per track) or free (values are
//! chosen during the search and variables are named canonically by first
//! occurrence, so alpha-equivalent rules are produced once).

use std::ops::ControlFlow;

use crate::symbols::{LenRange, SymbolId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Usage {
    Any,
    AtLeastOne,
    All,
}

pub(crate) enum Vars<'a> {
    /// `values[v][t]` is the value of `keys[v]` in track `t`.
    Fixed {
        keys: Vec<SymbolId>,
        values: Vec<Vec<Option<&'a [SymbolId]>>>,
    },
    Free {
        names: &'a [SymbolId],
        value_len: LenRange,
    },
}

pub(crate) struct AntiSubstitution<'a> {
    pub(crate) tracks: Vec<&'a [SymbolId]>,
    pub(crate) vars: Vars<'a>,
    pub(crate) literal_ok: &'a dyn Fn(SymbolId) -> bool,
    /// Admissible free-variable values.
    pub(crate) value_ok: &'a dyn Fn(&[SymbolId]) -> bool,
    pub(crate) rule_len: LenRange,
    pub(crate) usage: Usage,
    /// Search nodes visited before giving up.
    pub(crate) budget: u64,
}

/// Free-variable bindings: `bindings[v][t]` is a range into track `t`.
pub(crate) type Bindings = [Vec<(usize, usize)>];

const INF: usize = usize::MAX / 4;
const INF32: u32 = u32::MAX / 4;

struct Move {
    len: usize,
    before: bool,
    after: bool,
}

enum MinItems {
    /// `rows[t * stride + fresh][p]`.
    PerTrack { rows: Vec<Vec<usize>>, stride: usize },
    /// `table[fresh * plane + p1 * w + p2]`.
    Pair { table: Vec<u32>, w: usize, plane: usize },
}

impl MinItems {
    fn need(&self, pos: &[usize], fresh: usize) -> usize {
        match self {
            MinItems::PerTrack { rows, stride } => {
                let f = if *stride == 1 { 0 } else { fresh };
                pos.iter()
                    .enumerate()
                    .map(|(t, &p)| rows[t * stride + f][p])
                    .max()
                    .unwrap_or(0)
            }
            MinItems::Pair { table, w, plane } => match table[fresh * plane + pos[0] * w + pos[1]] {
                INF32.. => INF,
                n => n as usize,
            },
        }
    }
}

struct State {
    rule: Vec<SymbolId>,
    pos: Vec<usize>,
    used: Vec<bool>,
    bindings: Vec<Vec<(usize, usize)>>,
    nodes: u64,
    exhausted: bool,
}

impl AntiSubstitution<'_> {
    /// Calls `on` for every rule found; returns whether the budget ran out.
    pub(crate) fn run(&self, on: &mut dyn FnMut(&[SymbolId], &Bindings) -> ControlFlow<()>) -> bool {
        if let Vars::Fixed { keys, values } = &self.vars {
            debug_assert_eq!(keys.len(), values.len());
            let unusable = values
                .iter()
                .any(|per_track| per_track.iter().any(|v| v.is_none_or(|v| v.is_empty())));
            if unusable && self.usage == Usage::All {
                return false;
            }
        }
        let n_vars = match &self.vars {
            Vars::Fixed { keys, .. } => keys.len(),
            Vars::Free { .. } => 0,
        };
        let min_items = self.min_items_table();
        let mut st = State {
            rule: Vec::new(),
            pos: vec![0; self.tracks.len()],
            used: vec![false; n_vars],
            bindings: Vec::new(),
            nodes: 0,
            exhausted: false,
        };
        let _ = self.dfs(&mut st, &min_items, on);
        st.exhausted
    }

    /// Lower bound on the rule items covering the rest of the tracks.
    ///
    /// Fixed variables get an exact per-track table. With free variables a
    /// variable occurrence either uses up a fresh name or covers a substring
    /// that occurs again elsewhere in its track, as every occurrence of a
    /// repeated variable does. Two tracks are bounded jointly, since literals
    /// must line up in both.
    fn min_items_table(&self) -> MinItems {
        let values = match &self.vars {
            Vars::Fixed { values, .. } => values,
            Vars::Free { names, value_len } => {
                let lens = value_len.min.max(1)..=value_len.max;
                // moves[t][p]: admissible value lengths at p, with whether the
                // value occurs again before or after it in the track
                let moves: Vec<Vec<Vec<Move>>> = self
                    .tracks
                    .iter()
                    .map(|r| {
                        let n = r.len();
                        (0..n)
                            .map(|p| {
                                lens.clone()
                                    .take_while(|&l| p + l <= n)
                                    .filter(|&l| (self.value_ok)(&r[p..p + l]))
                                    .map(|l| {
                                        let v = &r[p..p + l];
                                        Move {
                                            len: l,
                                            before: (0..(p + 1).saturating_sub(l)).any(|q| &r[q..q + l] == v),
                                            after: (p + l..=n - l).any(|q| &r[q..q + l] == v),
                                        }
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                if self.tracks.len() == 2 {
                    return self.pair_table(names.len(), &moves);
                }
                let mut rows = Vec::new();
                for (r, moves) in self.tracks.iter().zip(&moves) {
                    let n = r.len();
                    let start = rows.len();
                    for f in 0..=names.len() {
                        let mut best = vec![INF; n + 1];
                        best[n] = 0;
                        for p in (0..n).rev() {
                            let mut b = INF;
                            if (self.literal_ok)(r[p]) {
                                b = b.min(best[p + 1] + 1);
                            }
                            for m in &moves[p] {
                                if f > 0 {
                                    let prev: &Vec<usize> = &rows[start + f - 1];
                                    b = b.min(prev[p + m.len] + 1);
                                }
                                if m.before || m.after {
                                    b = b.min(best[p + m.len] + 1);
                                }
                            }
                            best[p] = b;
                        }
                        rows.push(best);
                    }
                }
                return MinItems::PerTrack {
                    rows,
                    stride: names.len() + 1,
                };
            }
        };
        let rows = self
            .tracks
            .iter()
            .enumerate()
            .map(|(t, r)| {
                let n = r.len();
                let mut best = vec![INF; n + 1];
                best[n] = 0;
                for p in (0..n).rev() {
                    let mut b = INF;
                    if (self.literal_ok)(r[p]) {
                        b = b.min(best[p + 1] + 1);
                    }
                    for per_track in values {
                        if let Some(Some(v)) = per_track.get(t) {
                            if !v.is_empty() && r[p..].starts_with(v) {
                                b = b.min(best[p + v.len()] + 1);
                            }
                        }
                    }
                    best[p] = b;
                }
                best
            })
            .collect();
        MinItems::PerTrack { rows, stride: 1 }
    }

    fn pair_table(&self, names: usize, moves: &[Vec<Vec<Move>>]) -> MinItems {
        let (r1, r2) = (self.tracks[0], self.tracks[1]);
        let (n1, n2) = (r1.len(), r2.len());
        let w = n2 + 1;
        let plane = (n1 + 1) * w;
        let mut table = vec![INF32; plane * (names + 1)];
        for f in 0..=names {
            let (done, rest) = table.split_at_mut(f * plane);
            let cur = &mut rest[..plane];
            let prev = (f > 0).then(|| &done[(f - 1) * plane..]);
            cur[n1 * w + n2] = 0;
            for p1 in (0..n1).rev() {
                for p2 in (0..n2).rev() {
                    let mut b = INF32;
                    if r1[p1] == r2[p2] && (self.literal_ok)(r1[p1]) {
                        b = b.min(cur[(p1 + 1) * w + p2 + 1] + 1);
                    }
                    for m1 in &moves[0][p1] {
                        for m2 in &moves[1][p2] {
                            let at = (p1 + m1.len) * w + p2 + m2.len;
                            if let Some(prev) = prev {
                                b = b.min(prev[at] + 1);
                            }
                            // the other occurrence comes on the same side in both tracks
                            if (m1.before && m2.before) || (m1.after && m2.after) {
                                b = b.min(cur[at] + 1);
                            }
                        }
                    }
                    cur[p1 * w + p2] = b;
                }
            }
        }
        MinItems::Pair { table, w, plane }
    }

    fn usage_ok(&self, st: &State) -> bool {
        let (any, all) = match &self.vars {
            Vars::Fixed { .. } => (st.used.iter().any(|&u| u), st.used.iter().all(|&u| u)),
            Vars::Free { .. } => (!st.bindings.is_empty(), true),
        };
        match self.usage {
            Usage::Any => true,
            Usage::AtLeastOne => any,
            Usage::All => all,
        }
    }

    fn dfs(
        &self,
        st: &mut State,
        min_items: &MinItems,
        on: &mut dyn FnMut(&[SymbolId], &Bindings) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        st.nodes += 1;
        if st.nodes > self.budget {
            st.exhausted = true;
            return ControlFlow::Break(());
        }
        let finished = self.tracks.iter().zip(&st.pos).filter(|(r, &p)| p == r.len()).count();
        if finished == self.tracks.len() {
            if self.rule_len.contains(st.rule.len()) && self.usage_ok(st) {
                return on(&st.rule, &st.bindings);
            }
            return ControlFlow::Continue(());
        }
        if finished > 0 {
            return ControlFlow::Continue(());
        }
        let slots = self.rule_len.max.saturating_sub(st.rule.len());
        let remaining: Vec<usize> = self.tracks.iter().zip(&st.pos).map(|(r, &p)| r.len() - p).collect();
        // every item consumes at least one token per track
        if st.rule.len() + remaining.iter().min().copied().unwrap_or(0) < self.rule_len.min {
            return ControlFlow::Continue(());
        }
        let fresh = match &self.vars {
            Vars::Fixed { .. } => 0,
            Vars::Free { names, .. } => names.len() - st.bindings.len(),
        };
        let need = min_items.need(&st.pos, fresh);
        if need > slots {
            return ControlFlow::Continue(());
        }
        let still_needed = match self.usage {
            Usage::All => st.used.iter().filter(|&&u| !u).count(),
            Usage::AtLeastOne if !self.usage_ok(st) => 1,
            _ => 0,
        };
        if still_needed > slots {
            return ControlFlow::Continue(());
        }

        match &self.vars {
            Vars::Fixed { keys, values } => {
                for (v, per_track) in values.iter().enumerate() {
                    let fits = per_track
                        .iter()
                        .zip(&self.tracks)
                        .zip(&st.pos)
                        .all(|((val, r), &p)| val.is_some_and(|val| !val.is_empty() && r[p..].starts_with(val)));
                    if !fits {
                        continue;
                    }
                    let saved = (st.pos.clone(), st.used[v]);
                    for (p, val) in st.pos.iter_mut().zip(per_track) {
                        *p += val.map_or(0, |x| x.len());
                    }
                    st.used[v] = true;
                    st.rule.push(keys[v]);
                    let flow = self.dfs(st, min_items, on);
                    st.rule.pop();
                    (st.pos, st.used[v]) = saved;
                    flow?;
                }
            }
            Vars::Free { names, value_len } => {
                for v in 0..st.bindings.len() {
                    let fits = (0..self.tracks.len()).all(|t| {
                        let (a, b) = st.bindings[v][t];
                        let r = self.tracks[t];
                        r[st.pos[t]..].starts_with(&r[a..b])
                    });
                    if !fits {
                        continue;
                    }
                    let saved = st.pos.clone();
                    for t in 0..self.tracks.len() {
                        let (a, b) = st.bindings[v][t];
                        st.pos[t] += b - a;
                    }
                    st.rule.push(names[v]);
                    let flow = self.dfs(st, min_items, on);
                    st.rule.pop();
                    st.pos = saved;
                    flow?;
                }
                if st.bindings.len() < names.len() {
                    let name = names[st.bindings.len()];
                    for lens in self.length_combos(&st.pos, &remaining, *value_len) {
                        let binding: Vec<(usize, usize)> =
                            st.pos.iter().zip(&lens).map(|(&p, &l)| (p, p + l)).collect();
                        let saved = st.pos.clone();
                        for (p, l) in st.pos.iter_mut().zip(&lens) {
                            *p += l;
                        }
                        st.bindings.push(binding);
                        st.rule.push(name);
                        let flow = self.dfs(st, min_items, on);
                        st.rule.pop();
                        st.bindings.pop();
                        st.pos = saved;
                        flow?;
                    }
                }
            }
        }

        let s = self.tracks[0][st.pos[0]];
        if (self.literal_ok)(s) && self.tracks.iter().zip(&st.pos).all(|(r, &p)| r[p] == s) {
            for p in st.pos.iter_mut() {
                *p += 1;
            }
            st.rule.push(s);
            let flow = self.dfs(st, min_items, on);
            st.rule.pop();
            for p in st.pos.iter_mut() {
                *p -= 1;
            }
            flow?;
        }
        ControlFlow::Continue(())
    }

    /// Admissible value lengths for a fresh variable, one per track.
    fn length_combos(&self, pos: &[usize], remaining: &[usize], value_len: LenRange) -> Vec<Vec<usize>> {
        let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
        for t in 0..self.tracks.len() {
            let lens: Vec<usize> = (value_len.min.max(1)..=value_len.max.min(remaining[t]))
                .filter(|&l| (self.value_ok)(&self.tracks[t][pos[t]..pos[t] + l]))
                .collect();
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    lens.iter().map(move |&l| {
                        let mut c = c.clone();
                        c.push(l);
                        c
                    })
                })
                .collect();
        }
        combos
    }
}
