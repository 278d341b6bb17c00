//! Partial-product reduction: adder-chain trees (Cascade) and compressor
//! trees (Wallace, Dadda) finished by a single adder chain.

mod cascade;
mod compressor;
mod dedup;
mod placement;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{ChainId, Netlist, SignalId};
use crate::ppgen::Multiplication;

pub use cascade::{cascade_reduce, CascadeOptions};
pub use compressor::{dadda_heights, dadda_reduce, wallace_reduce};
pub use dedup::dedup_chains;
pub use placement::{best_placement, PlacementCache, PlacementSolution, Strength};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cascade,
    Wallace,
    Dadda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Cascade, Algorithm::Wallace, Algorithm::Dadda];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Cascade => "cascade",
            Algorithm::Wallace => "wallace",
            Algorithm::Dadda => "dadda",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cascade" => Ok(Algorithm::Cascade),
            "wallace" => Ok(Algorithm::Wallace),
            "dadda" => Ok(Algorithm::Dadda),
            _ => Err(Error::UnknownAlgorithm(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressorKind {
    Fa,
    Ha,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Insertion {
    /// Rows are indices into the stage's input rows. `shared` marks a chain
    /// whose operands duplicate an earlier one and reuse its outputs.
    Chain { rows: (usize, usize), chain: Option<ChainId>, shared: bool },
    Compressor { column: u32, kind: CompressorKind },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stage {
    pub insertions: Vec<Insertion>,
    /// Cascade stages: the placement strength that was selected.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strength: Option<Strength>,
    /// Compressor stages: the column height the stage reduces to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_height: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReductionPlan {
    pub algorithm: Algorithm,
    pub stages: Vec<Stage>,
    pub final_chain: Option<ChainId>,
}

impl ReductionPlan {
    pub fn compressor_stages(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| s.insertions.iter().any(|i| matches!(i, Insertion::Compressor { .. })))
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A reduced multiplier: the netlist drives output bus `p` with the product.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub netlist: Netlist,
    pub plan: ReductionPlan,
}

impl Reduction {
    /// Number of full adders in the final chain, 0 when there is none.
    pub fn final_chain_len(&self) -> usize {
        self.plan.final_chain.map_or(0, |c| self.netlist.chain(c).len())
    }
}

/// Runs one reduction algorithm with default options.
pub fn reduce(mult: &Multiplication, algorithm: Algorithm) -> Result<Reduction> {
    match algorithm {
        Algorithm::Cascade => cascade_reduce(mult, &CascadeOptions::default()),
        Algorithm::Wallace => wallace_reduce(mult),
        Algorithm::Dadda => dadda_reduce(mult),
    }
}

/// Two rows aligned on a common weight origin; `None` is a constant zero.
#[derive(Clone, Debug)]
pub(crate) struct TwoRows {
    pub shift: u32,
    pub x: Vec<Option<SignalId>>,
    pub y: Vec<Option<SignalId>>,
}

/// How a chain sums two aligned rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ChainLayout {
    pub shift: u32,
    /// Low bits that need no adder.
    pub passthrough: Vec<Option<SignalId>>,
    pub a: Vec<Option<SignalId>>,
    pub b: Vec<Option<SignalId>>,
}

impl ChainLayout {
    /// Signals generated by the chain: one sum per adder plus the carry-out.
    pub fn outputs(&self) -> u64 {
        if self.a.is_empty() {
            0
        } else {
            self.a.len() as u64 + 1
        }
    }
}

impl TwoRows {
    /// With `fold`, the chain starts at the lowest weight where both operands
    /// are non-zero and stops at the highest non-zero weight. Without it the
    /// chain covers everything from `start` upward, zeros included.
    pub fn layout(&self, fold: bool, start: usize) -> ChainLayout {
        let len = self.x.len();
        let (first, last) = if fold {
            let first = (0..len).find(|&i| self.x[i].is_some() && self.y[i].is_some());
            let last = (0..len).rev().find(|&i| self.x[i].is_some() || self.y[i].is_some());
            (first, last)
        } else {
            (Some(start).filter(|&s| s < len), len.checked_sub(1))
        };
        let merge = |i: usize| self.x[i].or(self.y[i]);
        match (first, last) {
            (Some(f), Some(l)) if f <= l => ChainLayout {
                shift: self.shift,
                passthrough: (0..f).map(merge).collect(),
                a: self.x[f..=l].to_vec(),
                b: self.y[f..=l].to_vec(),
            },
            _ => {
                let end = (0..len).rev().find(|&i| self.x[i].is_some() || self.y[i].is_some()).map_or(0, |l| l + 1);
                ChainLayout { shift: self.shift, passthrough: (0..end).map(merge).collect(), a: Vec::new(), b: Vec::new() }
            }
        }
    }
}

/// Emits a chain for `layout` and returns the resulting row bits (from
/// `layout.shift` upward) along with the chain id.
pub(crate) fn emit_chain(netlist: &mut Netlist, layout: &ChainLayout) -> (Vec<SignalId>, Option<ChainId>) {
    let zero = netlist.constant(false);
    let mut bits: Vec<SignalId> = layout.passthrough.iter().map(|b| b.unwrap_or(zero)).collect();
    if layout.a.is_empty() {
        return (bits, None);
    }
    let a: Vec<SignalId> = layout.a.iter().map(|b| b.unwrap_or(zero)).collect();
    let b: Vec<SignalId> = layout.b.iter().map(|b| b.unwrap_or(zero)).collect();
    let out = netlist.add_chain(&a, &b, zero);
    bits.extend(&out.sums);
    bits.push(out.cout);
    (bits, Some(out.id))
}

/// Drives output bus `p` from a single row, padded with zeros.
pub(crate) fn drive_product(netlist: &mut Netlist, width: u32, shift: u32, bits: &[SignalId]) {
    let zero = netlist.constant(false);
    let p = (0..width)
        .map(|w| {
            w.checked_sub(shift)
                .and_then(|i| bits.get(i as usize).copied())
                .unwrap_or(zero)
        })
        .collect();
    netlist.set_output_bus("p", p);
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::netlist::{Assignment, Netlist, Simulator};
    use crate::ppgen::{Multiplication, Operand};

    /// Exhaustively compares output `p` with the integer product.
    pub fn assert_multiplies(netlist: &Netlist, mult: &Multiplication) {
        let sim = Simulator::new(netlist).unwrap();
        let n = mult.matrix.multiplicand_width;
        let vectors: Vec<Assignment> = match mult.matrix.operand {
            Operand::Constant { .. } => (0..1u128 << n).map(|a| Assignment::from([("a".into(), a)])).collect(),
            Operand::Symbolic { width } => (0..1u128 << n)
                .flat_map(|a| (0..1u128 << width).map(move |b| Assignment::from([("a".into(), a), ("b".into(), b)])))
                .collect(),
        };
        for (v, r) in vectors.iter().zip(sim.run_batch(&vectors).unwrap()) {
            let expect = match mult.matrix.operand {
                Operand::Constant { value } => v["a"] * value as u128,
                Operand::Symbolic { .. } => v["a"] * v["b"],
            };
            assert_eq!(r["p"], expect, "inputs {v:?}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(i: u32) -> Option<SignalId> {
        Some(SignalId(i))
    }

    #[test]
    fn algorithm_names_roundtrip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("booth".parse::<Algorithm>().is_err());
    }

    #[test]
    fn fold_skips_single_operand_low_bits_and_zero_tail() {
        let rows = TwoRows { shift: 3, x: vec![s(1), s(2), s(3), None, None], y: vec![None, s(5), s(6), s(7), None] };
        let l = rows.layout(true, 1);
        assert_eq!(l.passthrough, vec![s(1)]);
        assert_eq!(l.a, vec![s(2), s(3), None]);
        assert_eq!(l.b, vec![s(5), s(6), s(7)]);
        assert_eq!(l.outputs(), 4);
        let legacy = rows.layout(false, 1);
        assert_eq!(legacy.a.len(), 4);
    }

    #[test]
    fn disjoint_rows_concatenate() {
        let rows = TwoRows { shift: 0, x: vec![s(1), None, None], y: vec![None, None, s(9)] };
        let l = rows.layout(true, 2);
        assert!(l.a.is_empty());
        assert_eq!(l.passthrough, vec![s(1), None, s(9)]);
    }
}
