//! Partial-product matrices for generic and constant-operand multiplication.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netlist::{Netlist, SignalId};

/// Default limit on the bit length of a constant operand.
pub const DEFAULT_MAX_CONSTANT_BITS: u32 = 64;

/// A shifted row of bit signals; bit `i` has weight `shift + i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub shift: u32,
    pub bits: Vec<SignalId>,
    /// Constant-operand bit that admitted this row (unrolled rows only).
    pub selector: Option<u32>,
}

impl Row {
    /// One past the highest weight covered.
    pub fn end(&self) -> u32 {
        self.shift + self.bits.len() as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operand {
    Constant { value: u64 },
    Symbolic { width: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PartialProductMatrix {
    pub rows: Vec<Row>,
    pub multiplicand_width: u32,
    pub operand: Operand,
}

impl PartialProductMatrix {
    /// Width of the full product bus.
    pub fn product_width(&self) -> u32 {
        let other = match self.operand {
            Operand::Constant { value } => 64 - value.leading_zeros(),
            Operand::Symbolic { width } => width,
        };
        self.multiplicand_width + other
    }

    /// Tallest column of the matrix.
    pub fn max_column_height(&self) -> usize {
        let mut heights = vec![0usize; self.product_width() as usize + 1];
        for row in &self.rows {
            for w in row.shift..row.end() {
                heights[w as usize] += 1;
            }
        }
        heights.into_iter().max().unwrap_or(0)
    }

    /// Weighted sum of the rows given a value for every signal.
    pub fn weighted_sum(&self, value_of: impl Fn(SignalId) -> bool) -> u128 {
        self.rows
            .iter()
            .flat_map(|r| r.bits.iter().enumerate().map(move |(i, s)| (r.shift as usize + i, *s)))
            .filter(|(_, s)| value_of(*s))
            .map(|(w, _)| 1u128 << w)
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A matrix plus the netlist holding its input buses (`a`, and `b` for
/// generic multiplies) and any partial-product gates.
#[derive(Clone, Debug)]
pub struct Multiplication {
    pub netlist: Netlist,
    pub matrix: PartialProductMatrix,
}

/// `a * constant`: one row per set bit of the constant, shifted by that bit's
/// index. Rows reference the multiplicand signals directly.
pub fn generate_unrolled(width: u32, constant: u64) -> Result<Multiplication> {
    generate_unrolled_with_limit(width, constant, DEFAULT_MAX_CONSTANT_BITS)
}

pub fn generate_unrolled_with_limit(width: u32, constant: u64, max_constant_bits: u32) -> Result<Multiplication> {
    if width == 0 {
        return Err(Error::ZeroWidth);
    }
    if max_constant_bits < 64 && constant >> max_constant_bits != 0 {
        return Err(Error::ConstantTooWide { constant, max_bits: max_constant_bits });
    }
    let mut netlist = Netlist::new(format!("mul{width}x{constant:#x}"));
    let a = netlist.add_input_bus("a", width as usize);
    let rows = (0..64)
        .filter(|j| (constant >> j) & 1 == 1)
        .map(|j| Row { shift: j, bits: a.clone(), selector: Some(j) })
        .collect();
    let matrix = PartialProductMatrix { rows, multiplicand_width: width, operand: Operand::Constant { value: constant } };
    Ok(Multiplication { netlist, matrix })
}

/// Unrolled matrix with a row for every constant bit up to the highest set
/// one. Rows whose selector bit is zero are tied to constant 0, which is what
/// a flow without selector-bit exclusion ends up summing.
pub fn generate_unrolled_unpruned(width: u32, constant: u64) -> Result<Multiplication> {
    let mut m = generate_unrolled(width, constant)?;
    let zero = m.netlist.constant(false);
    let a = m.netlist.input_bus("a").expect("multiplicand bus").signals.clone();
    let top = 64 - constant.leading_zeros();
    m.matrix.rows = (0..top)
        .map(|j| {
            let bits = if (constant >> j) & 1 == 1 { a.clone() } else { vec![zero; a.len()] };
            Row { shift: j, bits, selector: Some(j) }
        })
        .collect();
    Ok(m)
}

/// `a * b` as an AND array: row `j` holds `a_i & b_j` at shift `j`.
pub fn generate_generic(width_a: u32, width_b: u32) -> Result<Multiplication> {
    if width_a == 0 || width_b == 0 {
        return Err(Error::ZeroWidth);
    }
    let mut netlist = Netlist::new(format!("mul{width_a}x{width_b}"));
    let a = netlist.add_input_bus("a", width_a as usize);
    let b = netlist.add_input_bus("b", width_b as usize);
    let rows = b
        .iter()
        .enumerate()
        .map(|(j, &bj)| Row {
            shift: j as u32,
            bits: a.iter().map(|&ai| netlist.and(ai, bj)).collect(),
            selector: None,
        })
        .collect();
    let matrix = PartialProductMatrix { rows, multiplicand_width: width_a, operand: Operand::Symbolic { width: width_b } };
    Ok(Multiplication { netlist, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{NodeKind, Simulator};

    fn column_sum(m: &Multiplication, a: u128, b: u128) -> u128 {
        let sim = Simulator::new(&m.netlist).unwrap();
        let mut words = vec![0u64; m.netlist.signal_count()];
        for (name, v) in [("a", a), ("b", b)] {
            if let Some(bus) = m.netlist.input_bus(name) {
                for (i, s) in bus.signals.iter().enumerate() {
                    words[s.index()] = ((v >> i) & 1) as u64;
                }
            }
        }
        sim.eval_words(&mut words);
        m.matrix.weighted_sum(|s| words[s.index()] & 1 == 1)
    }

    #[test]
    fn unrolled_keeps_only_set_bits() {
        let m = generate_unrolled(8, 0b0101_0101).unwrap();
        let shifts: Vec<u32> = m.matrix.rows.iter().map(|r| r.shift).collect();
        assert_eq!(shifts, vec![0, 2, 4, 6]);
        assert!(m.matrix.rows.iter().all(|r| r.selector == Some(r.shift)));
        let a = &m.netlist.input_bus("a").unwrap().signals;
        assert!(m.matrix.rows.iter().all(|r| &r.bits == a));
    }

    #[test]
    fn unrolled_edge_constants() {
        assert!(generate_unrolled(4, 0).unwrap().matrix.rows.is_empty());
        let one = generate_unrolled(6, 1).unwrap();
        assert_eq!(one.matrix.rows.len(), 1);
        assert_eq!(one.matrix.rows[0].shift, 0);
        assert!(matches!(generate_unrolled(0, 3), Err(Error::ZeroWidth)));
        assert!(matches!(generate_unrolled_with_limit(4, 1 << 20, 16), Err(Error::ConstantTooWide { .. })));
    }

    #[test]
    fn generic_is_an_and_array() {
        let m = generate_generic(4, 4).unwrap();
        assert_eq!(m.matrix.rows.len(), 4);
        for (j, row) in m.matrix.rows.iter().enumerate() {
            assert_eq!(row.shift, j as u32);
            assert_eq!(row.bits.len(), 4);
            assert!(row.bits.iter().all(|s| matches!(m.netlist.driver_node(*s).kind, NodeKind::Gate { .. })));
        }
        let single = generate_generic(1, 1).unwrap();
        assert_eq!(single.matrix.rows.len(), 1);
        assert_eq!(crate::netlist::stats(&single.netlist).gates, 1);
    }

    #[test]
    fn column_sums_equal_products() {
        for c in 0..64u64 {
            let m = generate_unrolled(4, c).unwrap();
            for a in 0..16u128 {
                assert_eq!(column_sum(&m, a, 0), a * c as u128);
            }
        }
        let g = generate_generic(3, 2).unwrap();
        for a in 0..8u128 {
            for b in 0..4u128 {
                assert_eq!(column_sum(&g, a, b), a * b);
            }
        }
    }

    #[test]
    fn unpruned_keeps_zero_rows() {
        let m = generate_unrolled_unpruned(8, 0b0101_0101).unwrap();
        assert_eq!(m.matrix.rows.len(), 7);
        for a in [0u128, 1, 77, 255] {
            assert_eq!(column_sum(&m, a, 0), a * 0b0101_0101);
        }
    }

    #[test]
    fn same_pattern_constants_are_structurally_identical() {
        let x = generate_unrolled(5, 0b1011).unwrap();
        let y = generate_unrolled(5, 0b1011).unwrap();
        assert_eq!(x.matrix, y.matrix);
        assert_eq!(x.matrix.to_json().unwrap(), y.matrix.to_json().unwrap());
    }
}
