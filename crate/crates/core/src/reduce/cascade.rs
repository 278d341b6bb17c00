use std::collections::HashMap;

use super::placement::{adjacent_placement, pair_layout, PlacementCache, RowPairKey, DEFAULT_ROW_CAP};
use super::{drive_product, emit_chain, Algorithm, Insertion, Reduction, ReductionPlan, Stage};
use crate::error::Result;
use crate::netlist::{ChainId, SignalId};
use crate::ppgen::{Multiplication, Row};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CascadeOptions {
    /// Instantiate chains with identical operands once and fan out their sums.
    pub dedup: bool,
    /// Pick row pairs by maximum strength instead of adjacent shifts.
    pub strength_pairing: bool,
    /// Start chains at the first weight where both operands are non-zero and
    /// drop all-zero top bits.
    pub fold_zero_bits: bool,
    pub row_cap: usize,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        CascadeOptions { dedup: true, strength_pairing: true, fold_zero_bits: true, row_cap: DEFAULT_ROW_CAP }
    }
}

impl CascadeOptions {
    /// The unoptimized binary adder tree: adjacent pairs, every chain
    /// instantiated, zero bits summed like any other.
    pub fn legacy() -> Self {
        CascadeOptions { dedup: false, strength_pairing: false, fold_zero_bits: false, row_cap: DEFAULT_ROW_CAP }
    }
}

/// Sums the matrix rows with a tree of adder chains, one stage at a time,
/// until a single row remains.
pub fn cascade_reduce(mult: &Multiplication, opts: &CascadeOptions) -> Result<Reduction> {
    let mut netlist = mult.netlist.clone();
    let zero = netlist.constant(false);
    let mut rows: Vec<Row> = mult.matrix.rows.iter().map(|r| Row { selector: None, ..r.clone() }).collect();
    let mut stages = Vec::new();
    let mut shared: HashMap<RowPairKey, (Vec<SignalId>, Option<ChainId>)> =
        HashMap::new();
    let mut last_chain = None;

    while rows.len() > 1 {
        let mut cache = PlacementCache::new(Some(zero)).with_row_cap(opts.row_cap);
        let solution = if opts.strength_pairing {
            super::best_placement(&rows, &mut cache)?
        } else {
            adjacent_placement(&rows, &mut cache)
        };
        let mut insertions = Vec::with_capacity(solution.pairs.len());
        let mut next = Vec::with_capacity(rows.len().div_ceil(2));
        let mut used = vec![false; rows.len()];
        for &(i, j) in &solution.pairs {
            used[i] = true;
            used[j] = true;
            let (layout, _) = pair_layout(&rows, i, j, Some(zero), opts.fold_zero_bits);
            let key = (layout.a.clone(), layout.b.clone());
            let (sums, chain, reused) = match shared.get(&key).filter(|_| opts.dedup && !layout.a.is_empty()) {
                Some((sums, chain)) => (sums.clone(), *chain, true),
                None => {
                    let (bits, chain) = emit_chain(&mut netlist, &layout);
                    let sums = bits[layout.passthrough.len()..].to_vec();
                    if opts.dedup {
                        shared.insert(key, (sums.clone(), chain));
                    }
                    (sums, chain, false)
                }
            };
            let mut bits: Vec<SignalId> = layout.passthrough.iter().map(|b| b.unwrap_or(zero)).collect();
            bits.extend(sums);
            if chain.is_some() {
                last_chain = chain;
            }
            insertions.push(Insertion::Chain { rows: (i, j), chain, shared: reused });
            next.push(Row { shift: layout.shift, bits, selector: None });
        }
        next.extend(rows.iter().zip(&used).filter(|(_, u)| !**u).map(|(r, _)| r.clone()));
        stages.push(Stage { insertions, strength: Some(solution.strength), target_height: None });
        rows = next;
    }

    let width = mult.matrix.product_width();
    match rows.first() {
        Some(row) => drive_product(&mut netlist, width, row.shift, &row.bits),
        None => drive_product(&mut netlist, width, 0, &[]),
    }
    let plan = ReductionPlan { algorithm: Algorithm::Cascade, stages, final_chain: last_chain };
    Ok(Reduction { netlist, plan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{stats, validate};
    use crate::ppgen::{generate_generic, generate_unrolled, generate_unrolled_unpruned};
    use crate::reduce::test_support::assert_multiplies;

    #[test]
    fn generic_four_rows_use_three_chains() {
        let m = generate_generic(4, 4).unwrap();
        let r = cascade_reduce(&m, &CascadeOptions::default()).unwrap();
        assert!(validate(&r.netlist).is_empty());
        assert_eq!(stats(&r.netlist).chains, 3);
        assert_eq!(r.plan.stages.len(), 2);
        assert_multiplies(&r.netlist, &m);
    }

    #[test]
    fn single_row_needs_no_adders() {
        let m = generate_unrolled(6, 1).unwrap();
        let r = cascade_reduce(&m, &CascadeOptions::default()).unwrap();
        assert!(r.plan.stages.is_empty());
        assert_eq!(stats(&r.netlist).full_adders, 0);
        assert_multiplies(&r.netlist, &m);
    }

    #[test]
    fn zero_constant_ties_product_low() {
        let m = generate_unrolled(4, 0).unwrap();
        let r = cascade_reduce(&m, &CascadeOptions::default()).unwrap();
        assert_eq!(r.netlist.output_bus("p").unwrap().width(), 4);
        assert_multiplies(&r.netlist, &m);
    }

    #[test]
    fn dedup_shares_identical_chains() {
        let m = generate_unrolled(8, 0b0101_0101).unwrap();
        let on = cascade_reduce(&m, &CascadeOptions::default()).unwrap();
        let off = cascade_reduce(&m, &CascadeOptions { dedup: false, ..Default::default() }).unwrap();
        assert_multiplies(&on.netlist, &m);
        assert_multiplies(&off.netlist, &m);
        let first = &on.plan.stages[0].insertions;
        assert!(matches!(first[1], Insertion::Chain { shared: true, .. }));
        assert!(stats(&on.netlist).full_adders < stats(&off.netlist).full_adders);
    }

    #[test]
    fn legacy_tree_sums_zero_rows() {
        let m = generate_unrolled_unpruned(8, 0b0101_0101).unwrap();
        let r = cascade_reduce(&m, &CascadeOptions::legacy()).unwrap();
        assert!(validate(&r.netlist).is_empty());
        assert_multiplies(&r.netlist, &m);
        assert_eq!(stats(&r.netlist).chains, 6);
    }

    #[test]
    fn stage_count_is_log2_of_rows() {
        for rows in 2..=8u32 {
            let m = generate_generic(5, rows).unwrap();
            let r = cascade_reduce(&m, &CascadeOptions { dedup: false, ..Default::default() }).unwrap();
            assert_eq!(r.plan.stages.len() as u32, rows.next_power_of_two().trailing_zeros(), "{rows} rows");
            assert_multiplies(&r.netlist, &m);
        }
    }
}
