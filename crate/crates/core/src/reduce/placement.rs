//! Adder row selection for maximum strength.
//!
//! A stage of the Cascade reduction pairs up rows, one adder chain per pair.
//! The strength of a stage is the number of input bit positions consumed by
//! all its chains divided by the number of signals generated by the distinct
//! chains: a chain whose operands duplicate another chain's operands adds
//! inputs but no outputs, since one chain can serve both.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;

use super::{ChainLayout, TwoRows};
use crate::error::{Error, Result};
use crate::netlist::SignalId;
use crate::ppgen::Row;

/// Signals of two rows, column by column.
pub(crate) type RowPairKey = (Vec<Option<SignalId>>, Vec<Option<SignalId>>);

/// Default number of rows above which pairing falls back to adjacent rows.
pub const DEFAULT_ROW_CAP: usize = 24;

/// Default number of rows up to which the memo keeps every non-dominated
/// partial solution, which makes the result exactly optimal. Above it each
/// row subset memoizes only its single strongest solution.
pub const DEFAULT_EXACT_LIMIT: usize = 12;

/// `inputs / outputs`, compared exactly. Zero outputs ranks above any finite
/// ratio (a pairing that needs no adders at all).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Strength {
    pub inputs: u64,
    pub outputs: u64,
}

impl Strength {
    pub fn value(&self) -> f64 {
        if self.outputs == 0 {
            f64::INFINITY
        } else {
            self.inputs as f64 / self.outputs as f64
        }
    }
}

impl Ord for Strength {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.outputs, other.outputs) {
            (0, 0) => self.inputs.cmp(&other.inputs),
            (0, _) => Ordering::Greater,
            (_, 0) => Ordering::Less,
            _ => (self.inputs as u128 * other.outputs as u128).cmp(&(other.inputs as u128 * self.outputs as u128)),
        }
    }
}

impl PartialOrd for Strength {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Strength {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Strength {}

/// Chosen pairing for one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PlacementSolution {
    /// Row index pairs, lexicographically sorted.
    pub pairs: Vec<(usize, usize)>,
    pub strength: Strength,
    /// Rows the solution covers, as a bit set over row indices.
    pub cache_key: u64,
    /// Number of distinct chains once duplicates are shared.
    pub unique_chains: usize,
    #[serde(skip)]
    keys: Vec<u32>,
}

impl PlacementSolution {
    pub fn included_inputs(&self) -> u64 {
        self.strength.inputs
    }

    pub fn outputs(&self) -> u64 {
        self.strength.outputs
    }
}

struct PairInfo {
    key: u32,
    inputs: u64,
    outputs: u64,
}

/// Solution memo for one row set, keyed by row subset.
#[derive(Default)]
pub struct PlacementCache {
    zero: Option<SignalId>,
    row_cap: usize,
    exact_limit: usize,
    fingerprint: Vec<(u32, Vec<SignalId>)>,
    pairs: HashMap<(usize, usize), PairInfo>,
    memo: HashMap<u64, PlacementSolution>,
    fronts: HashMap<u64, Rc<Vec<Partial>>>,
}

/// A partial pairing in the exact search. `keys` holds the distinct chains
/// that generate outputs.
#[derive(Clone, Debug)]
struct Partial {
    pairs: Vec<(usize, usize)>,
    keys: Vec<u32>,
    inputs: u64,
    outputs: u64,
}

impl Partial {
    fn strength(&self) -> Strength {
        Strength { inputs: self.inputs, outputs: self.outputs }
    }

    /// True when `self` is at least as good as `other` after any common
    /// extension: no fewer inputs and a subset of its chains.
    fn dominates(&self, other: &Partial) -> bool {
        self.inputs >= other.inputs
            && self.keys.len() <= other.keys.len()
            && self.keys.iter().all(|k| other.keys.binary_search(k).is_ok())
            && (self.inputs > other.inputs || self.keys.len() < other.keys.len() || self.pairs <= other.pairs)
    }
}

fn push_front(front: &mut Vec<Partial>, cand: Partial) {
    if front.iter().any(|f| f.dominates(&cand)) {
        return;
    }
    front.retain(|f| !cand.dominates(f));
    front.push(cand);
}

impl PlacementCache {
    /// `zero` is the constant-0 signal, if the netlist has one; row bits
    /// carrying it count as absent.
    pub fn new(zero: Option<SignalId>) -> Self {
        PlacementCache { zero, row_cap: DEFAULT_ROW_CAP, exact_limit: DEFAULT_EXACT_LIMIT, ..Default::default() }
    }

    pub fn with_exact_limit(mut self, limit: usize) -> Self {
        self.exact_limit = limit;
        self
    }

    pub fn with_row_cap(mut self, cap: usize) -> Self {
        self.row_cap = cap;
        self
    }

    /// Number of memoized row subsets.
    pub fn len(&self) -> usize {
        self.memo.len() + self.fronts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn prepare(&mut self, rows: &[Row]) {
        let fp: Vec<(u32, Vec<SignalId>)> = rows.iter().map(|r| (r.shift, r.bits.clone())).collect();
        if fp == self.fingerprint {
            return;
        }
        self.fingerprint = fp;
        self.memo.clear();
        self.fronts.clear();
        self.pairs.clear();
        let mut interner: HashMap<RowPairKey, u32> = HashMap::new();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (layout, inputs) = pair_layout(rows, i, j, self.zero, true);
                let next = interner.len() as u32;
                let key = *interner.entry((layout.a.clone(), layout.b.clone())).or_insert(next);
                self.pairs.insert((i, j), PairInfo { key, inputs, outputs: layout.outputs() });
            }
        }
    }

    fn pair(&self, i: usize, j: usize) -> &PairInfo {
        &self.pairs[&(i.min(j), i.max(j))]
    }

    /// Folds pair `(i, j)` into `rest`.
    fn extend(&self, rest: Option<&PlacementSolution>, i: usize, j: usize) -> PlacementSolution {
        let p = self.pair(i, j);
        let mut sol = rest.cloned().unwrap_or(PlacementSolution {
            pairs: Vec::new(),
            strength: Strength::default(),
            cache_key: 0,
            unique_chains: 0,
            keys: Vec::new(),
        });
        sol.strength.inputs += p.inputs;
        if let Err(pos) = sol.keys.binary_search(&p.key) {
            sol.keys.insert(pos, p.key);
            if p.outputs > 0 {
                sol.strength.outputs += p.outputs;
                sol.unique_chains += 1;
            }
        }
        let pos = sol.pairs.binary_search(&(i, j)).unwrap_or_else(|e| e);
        sol.pairs.insert(pos, (i, j));
        sol.cache_key |= (1 << i) | (1 << j);
        sol
    }

    fn solve(&mut self, mask: u64) -> PlacementSolution {
        let n = mask.count_ones();
        if n == 2 {
            let i = mask.trailing_zeros() as usize;
            let j = 63 - mask.leading_zeros() as usize;
            return self.extend(None, i, j);
        }
        if let Some(hit) = self.memo.get(&mask) {
            return hit.clone();
        }
        let members: Vec<usize> = (0..64).filter(|b| mask >> b & 1 == 1).collect();
        let mut best: Option<PlacementSolution> = None;
        if n.is_multiple_of(2) {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    let rest = self.solve(mask & !(1 << i) & !(1 << j));
                    let cand = self.extend(Some(&rest), i, j);
                    if best.as_ref().is_none_or(|b| cand.strength > b.strength) {
                        best = Some(cand);
                    }
                }
            }
        } else {
            for &r in &members {
                let cand = self.solve(mask & !(1 << r));
                if best.as_ref().is_none_or(|b| cand.strength > b.strength) {
                    best = Some(cand);
                }
            }
        }
        let best = best.expect("non-empty row set");
        self.memo.insert(mask, best.clone());
        best
    }

    /// Non-dominated pairings of `mask`, following the same recursion as
    /// [`Self::solve`].
    fn front(&mut self, mask: u64) -> Rc<Vec<Partial>> {
        if let Some(hit) = self.fronts.get(&mask) {
            return hit.clone();
        }
        let n = mask.count_ones();
        let members: Vec<usize> = (0..64).filter(|b| mask >> b & 1 == 1).collect();
        let mut front = Vec::new();
        if n < 2 {
            front.push(Partial { pairs: Vec::new(), keys: Vec::new(), inputs: 0, outputs: 0 });
        } else if n.is_multiple_of(2) {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    let rest = self.front(mask & !(1 << i) & !(1 << j));
                    let p = self.pair(i, j);
                    for r in rest.iter() {
                        let mut c = r.clone();
                        c.inputs += p.inputs;
                        if p.outputs > 0 {
                            if let Err(pos) = c.keys.binary_search(&p.key) {
                                c.keys.insert(pos, p.key);
                                c.outputs += p.outputs;
                            }
                        }
                        let pos = c.pairs.binary_search(&(i, j)).unwrap_or_else(|e| e);
                        c.pairs.insert(pos, (i, j));
                        push_front(&mut front, c);
                    }
                }
            }
        } else {
            for &r in &members {
                for c in self.front(mask & !(1 << r)).iter() {
                    push_front(&mut front, c.clone());
                }
            }
        }
        let front = Rc::new(front);
        self.fronts.insert(mask, front.clone());
        front
    }

    fn solve_exact(&mut self, mask: u64) -> PlacementSolution {
        let front = self.front(mask);
        let best = front
            .iter()
            .max_by(|a, b| a.strength().cmp(&b.strength()).then_with(|| b.pairs.cmp(&a.pairs)))
            .expect("non-empty front");
        let mut sol: Option<PlacementSolution> = None;
        for &(i, j) in &best.pairs {
            sol = Some(self.extend(sol.as_ref(), i, j));
        }
        sol.expect("at least one pair")
    }

    /// Pairs rows in shift order: (0, 1), (2, 3), ...; an odd row out is the
    /// one with the highest shift.
    fn adjacent(&self, rows: &[Row]) -> PlacementSolution {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| (rows[i].shift, i));
        let mut sol: Option<PlacementSolution> = None;
        for pair in order.chunks_exact(2) {
            let (i, j) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            sol = Some(self.extend(sol.as_ref(), i, j));
        }
        sol.expect("at least two rows")
    }
}

/// Best pairing of `rows` for one stage. Ties go to the lexicographically
/// smallest pair. Above the cache's row cap, rows are paired adjacently.
pub fn best_placement(rows: &[Row], cache: &mut PlacementCache) -> Result<PlacementSolution> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows(rows.len()));
    }
    cache.prepare(rows);
    if rows.len() > cache.row_cap.min(64) {
        return Ok(cache.adjacent(rows));
    }
    let mask = if rows.len() == 64 { !0 } else { (1u64 << rows.len()) - 1 };
    if rows.len() <= cache.exact_limit {
        return Ok(cache.solve_exact(mask));
    }
    Ok(cache.solve(mask))
}

/// Adjacent pairing, as used when the strength heuristic is disabled.
pub(crate) fn adjacent_placement(rows: &[Row], cache: &mut PlacementCache) -> PlacementSolution {
    cache.prepare(rows);
    cache.adjacent(rows)
}

/// Aligns rows `i` and `j` (lower shift first) and lays out their chain.
/// Returns the layout and the number of non-zero input bit positions.
pub(crate) fn pair_layout(rows: &[Row], i: usize, j: usize, zero: Option<SignalId>, fold: bool) -> (ChainLayout, u64) {
    let (lo, hi) = if (rows[j].shift, j) < (rows[i].shift, i) { (&rows[j], &rows[i]) } else { (&rows[i], &rows[j]) };
    let base = lo.shift;
    let len = (lo.end().max(hi.end()) - base) as usize;
    let bit = |s: &SignalId| (Some(*s) != zero).then_some(*s);
    let mut x = vec![None; len];
    let mut y = vec![None; len];
    for (k, s) in lo.bits.iter().enumerate() {
        x[k] = bit(s);
    }
    let off = (hi.shift - base) as usize;
    for (k, s) in hi.bits.iter().enumerate() {
        y[off + k] = bit(s);
    }
    let inputs = x.iter().chain(&y).filter(|b| b.is_some()).count() as u64;
    let rows2 = TwoRows { shift: base, x, y };
    // Rows that do not overlap are concatenated in either mode.
    let layout = if fold || lo.end() <= hi.shift { rows2.layout(true, off) } else { rows2.layout(false, off) };
    (layout, inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppgen::generate_unrolled;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Independent oracle: enumerates every pairing and scores it directly
    // from the row bits.
    fn oracle_pair(rows: &[Row], i: usize, j: usize) -> (Vec<(u32, SignalId, SignalId)>, u64, u64) {
        let (lo, hi) = if rows[j].shift < rows[i].shift { (&rows[j], &rows[i]) } else { (&rows[i], &rows[j]) };
        let at = |r: &Row, w: u32| w.checked_sub(r.shift).and_then(|k| r.bits.get(k as usize).copied());
        let top = lo.end().max(hi.end());
        let both: Vec<u32> = (lo.shift..top).filter(|&w| at(lo, w).is_some() && at(hi, w).is_some()).collect();
        let inputs = (lo.bits.len() + hi.bits.len()) as u64;
        let Some(&first) = both.first() else { return (Vec::new(), inputs, 0) };
        let last = (lo.shift..top).rev().find(|&w| at(lo, w).is_some() || at(hi, w).is_some()).unwrap();
        let dummy = SignalId(u32::MAX);
        // Operand pairs relative to the chain start identify the chain.
        let key = (first..=last)
            .map(|w| (w - first, at(lo, w).unwrap_or(dummy), at(hi, w).unwrap_or(dummy)))
            .collect();
        (key, inputs, (last - first + 2) as u64)
    }

    fn matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if items.len() < 2 {
            return vec![Vec::new()];
        }
        if items.len() % 2 == 1 {
            return (0..items.len())
                .flat_map(|skip| {
                    let rest: Vec<usize> = items.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, v)| *v).collect();
                    matchings(&rest)
                })
                .collect();
        }
        let first = items[0];
        let mut out = Vec::new();
        for k in 1..items.len() {
            let rest: Vec<usize> = items[1..].iter().enumerate().filter(|(x, _)| *x + 1 != k).map(|(_, v)| *v).collect();
            for mut m in matchings(&rest) {
                m.insert(0, (first, items[k]));
                out.push(m);
            }
        }
        out
    }

    fn exhaustive_best(rows: &[Row]) -> Strength {
        let idx: Vec<usize> = (0..rows.len()).collect();
        matchings(&idx)
            .into_iter()
            .map(|m| {
                let mut inputs = 0;
                let mut outputs = 0;
                let mut seen = Vec::new();
                for (i, j) in m {
                    let (key, inp, out) = oracle_pair(rows, i, j);
                    inputs += inp;
                    if !seen.contains(&key) {
                        outputs += out;
                        seen.push(key);
                    }
                }
                Strength { inputs, outputs }
            })
            .max()
            .unwrap()
    }

    fn rows_of(width: u32, c: u64) -> Vec<Row> {
        generate_unrolled(width, c).unwrap().matrix.rows
    }

    #[test]
    fn two_rows_return_the_pair() {
        let rows = rows_of(6, 0b11);
        let sol = best_placement(&rows, &mut PlacementCache::new(None)).unwrap();
        assert_eq!(sol.pairs, vec![(0, 1)]);
        // 12 input positions; 6 adders (weights 1..=6) plus the carry-out.
        assert_eq!(sol.strength, Strength { inputs: 12, outputs: 7 });
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let rows = rows_of(4, 1);
        assert!(matches!(best_placement(&rows, &mut PlacementCache::new(None)), Err(Error::TooFewRows(1))));
    }

    #[test]
    fn three_rows_take_best_pair() {
        let rows = rows_of(6, 0b1011);
        let sol = best_placement(&rows, &mut PlacementCache::new(None)).unwrap();
        assert_eq!(sol.pairs.len(), 1);
        assert_eq!(sol.strength, exhaustive_best(&rows));
    }

    #[test]
    fn duplicate_pairs_share_outputs() {
        // Rows at 0, 2, 4, 6: pairing (0,2) with (4,6) gives two identical chains.
        let rows = rows_of(8, 0b0101_0101);
        let sol = best_placement(&rows, &mut PlacementCache::new(None)).unwrap();
        assert_eq!(sol.pairs, vec![(0, 1), (2, 3)]);
        assert_eq!(sol.unique_chains, 1);
        assert_eq!(sol.strength, Strength { inputs: 32, outputs: 9 });
    }

    #[test]
    fn six_by_six_matches_enumeration() {
        let rows = rows_of(6, 0b11_1111);
        let sol = best_placement(&rows, &mut PlacementCache::new(None)).unwrap();
        assert_eq!(sol.strength, exhaustive_best(&rows));
    }

    #[test]
    fn random_subsets_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let width = rng.gen_range(2..=8);
            let c: u64 = rng.gen_range(1..1 << 10);
            let rows = rows_of(width, c);
            if rows.len() < 2 || rows.len() > 6 {
                continue;
            }
            let sol = best_placement(&rows, &mut PlacementCache::new(None)).unwrap();
            assert_eq!(sol.strength, exhaustive_best(&rows), "width {width} constant {c:#b}");
        }
    }

    #[test]
    fn single_best_memo_can_miss_shared_chains() {
        // Rows at 2, 4, 5, 6, 8, 9: pairing (2,6), (4,8), (5,9) builds one
        // chain three times. Keeping only the best ratio per subset misses it.
        let rows = rows_of(6, 0b11_0111_0100);
        let exact = best_placement(&rows, &mut PlacementCache::new(None)).unwrap();
        assert_eq!(exact.strength, Strength { inputs: 36, outputs: 7 });
        assert_eq!(exact.pairs, vec![(0, 3), (1, 4), (2, 5)]);
        let greedy = best_placement(&rows, &mut PlacementCache::new(None).with_exact_limit(0)).unwrap();
        assert!(greedy.strength < exact.strength);
    }

    #[test]
    fn row_cap_falls_back_to_adjacent() {
        let rows = rows_of(4, 0b1111);
        let sol = best_placement(&rows, &mut PlacementCache::new(None).with_row_cap(3)).unwrap();
        assert_eq!(sol.pairs, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn strength_ordering() {
        let s = |i, o| Strength { inputs: i, outputs: o };
        assert!(s(4, 2) == s(2, 1));
        assert!(s(5, 2) > s(2, 1));
        assert!(s(1, 0) > s(100, 1));
        assert_eq!(s(0, 0).value(), f64::INFINITY);
    }
}
