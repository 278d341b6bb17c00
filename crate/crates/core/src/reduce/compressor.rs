//! Column compression with full/half-adder logic, emitted as plain gates so
//! LUT mapping can absorb it. Both trees finish with one adder chain over
//! the last two rows.

use super::{drive_product, emit_chain, Algorithm, CompressorKind, Insertion, Reduction, ReductionPlan, Stage, TwoRows};
use crate::error::Result;
use crate::netlist::{Netlist, SignalId};
use crate::ppgen::Multiplication;

type Columns = Vec<Vec<SignalId>>;

/// Dadda's maximum column heights, `d1 = 2`, `d(j+1) = floor(3 d(j) / 2)`,
/// for every height below `limit` plus the first one at or above it.
pub fn dadda_heights(limit: usize) -> Vec<usize> {
    let mut seq = vec![2];
    while *seq.last().unwrap() < limit {
        let d = *seq.last().unwrap();
        seq.push(d * 3 / 2);
    }
    seq
}

fn columns_of(mult: &Multiplication, netlist: &Netlist) -> Columns {
    let width = mult.matrix.product_width() as usize + 1;
    let mut cols = vec![Vec::new(); width];
    for row in &mult.matrix.rows {
        for (i, s) in row.bits.iter().enumerate() {
            if netlist.const_value(*s) == Some(false) {
                continue;
            }
            cols[row.shift as usize + i].push(*s);
        }
    }
    cols
}

fn max_height(cols: &Columns) -> usize {
    cols.iter().map(Vec::len).max().unwrap_or(0)
}

fn full_adder_logic(n: &mut Netlist, a: SignalId, b: SignalId, c: SignalId) -> (SignalId, SignalId) {
    let t = n.xor(a, b);
    let sum = n.xor(t, c);
    let g = n.and(a, b);
    let p = n.and(t, c);
    (sum, n.or(g, p))
}

fn half_adder_logic(n: &mut Netlist, a: SignalId, b: SignalId) -> (SignalId, SignalId) {
    (n.xor(a, b), n.and(a, b))
}

fn grow(cols: &mut Columns, len: usize) {
    if cols.len() < len {
        cols.resize(len, Vec::new());
    }
}

/// Sums the (at most two) remaining rows with one chain and drives `p`.
fn finish(mut netlist: Netlist, mult: &Multiplication, cols: &Columns, algorithm: Algorithm, stages: Vec<Stage>) -> Reduction {
    debug_assert!(max_height(cols) <= 2);
    let rows = TwoRows {
        shift: 0,
        x: cols.iter().map(|c| c.first().copied()).collect(),
        y: cols.iter().map(|c| c.get(1).copied()).collect(),
    };
    let layout = rows.layout(true, 0);
    let (bits, chain) = emit_chain(&mut netlist, &layout);
    drive_product(&mut netlist, mult.matrix.product_width(), 0, &bits);
    let plan = ReductionPlan { algorithm, stages, final_chain: chain };
    Reduction { netlist, plan }
}

/// Wallace-style reduction: every stage splits each column into groups of
/// three (full adders) and a leftover pair (half adder), with all outputs
/// moving to the next stage, until no column is taller than two.
pub fn wallace_reduce(mult: &Multiplication) -> Result<Reduction> {
    let mut netlist = mult.netlist.clone();
    let mut cols = columns_of(mult, &netlist);
    let mut stages = Vec::new();
    while max_height(&cols) > 2 {
        let mut next: Columns = vec![Vec::new(); cols.len() + 1];
        let mut insertions = Vec::new();
        for (w, bits) in cols.iter().enumerate() {
            let mut groups = bits.chunks_exact(3);
            for g in groups.by_ref() {
                let (s, c) = full_adder_logic(&mut netlist, g[0], g[1], g[2]);
                next[w].push(s);
                next[w + 1].push(c);
                insertions.push(Insertion::Compressor { column: w as u32, kind: CompressorKind::Fa });
            }
            match groups.remainder() {
                [a, b] => {
                    let (s, c) = half_adder_logic(&mut netlist, *a, *b);
                    next[w].push(s);
                    next[w + 1].push(c);
                    insertions.push(Insertion::Compressor { column: w as u32, kind: CompressorKind::Ha });
                }
                rest => next[w].extend_from_slice(rest),
            }
        }
        while next.last().is_some_and(Vec::is_empty) {
            next.pop();
        }
        stages.push(Stage { insertions, strength: None, target_height: Some(max_height(&next)) });
        cols = next;
    }
    Ok(finish(netlist, mult, &cols, Algorithm::Wallace, stages))
}

/// Dadda reduction: each stage brings every column down to the next height
/// in the Dadda sequence using as few compressors as possible, counting the
/// carries arriving from the column below.
pub fn dadda_reduce(mult: &Multiplication) -> Result<Reduction> {
    let mut netlist = mult.netlist.clone();
    let mut cols = columns_of(mult, &netlist);
    let heights = dadda_heights(max_height(&cols));
    let targets: Vec<usize> = heights.iter().rev().copied().filter(|&d| d < max_height(&cols)).collect();
    let mut stages = Vec::new();
    for target in targets {
        let len = cols.len() + 1;
        grow(&mut cols, len);
        let mut next: Columns = vec![Vec::new(); cols.len() + 1];
        let mut insertions = Vec::new();
        for w in 0..cols.len() {
            let mut avail: &[SignalId] = &cols[w];
            // next[w] already holds the carries from column w - 1.
            while avail.len() + next[w].len() > target {
                let excess = avail.len() + next[w].len() - target;
                if excess == 1 || avail.len() < 3 {
                    let (s, c) = half_adder_logic(&mut netlist, avail[0], avail[1]);
                    avail = &avail[2..];
                    next[w].push(s);
                    next[w + 1].push(c);
                    insertions.push(Insertion::Compressor { column: w as u32, kind: CompressorKind::Ha });
                } else {
                    let (s, c) = full_adder_logic(&mut netlist, avail[0], avail[1], avail[2]);
                    avail = &avail[3..];
                    next[w].push(s);
                    next[w + 1].push(c);
                    insertions.push(Insertion::Compressor { column: w as u32, kind: CompressorKind::Fa });
                }
            }
            next[w].extend_from_slice(avail);
        }
        while next.last().is_some_and(Vec::is_empty) {
            next.pop();
        }
        stages.push(Stage { insertions, strength: None, target_height: Some(target) });
        cols = next;
    }
    Ok(finish(netlist, mult, &cols, Algorithm::Dadda, stages))
}
