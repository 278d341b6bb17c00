//! Simulation-based checks: netlist equivalence and multiplier correctness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::netlist::{Assignment, Netlist, Simulator};
use crate::ppgen::Operand;

/// Total input bits up to which equivalence is checked exhaustively.
pub const EQUIV_EXHAUSTIVE_BITS: usize = 10;
/// Total input bits up to which products are checked exhaustively.
pub const PRODUCT_EXHAUSTIVE_BITS: usize = 16;
pub const RANDOM_VECTORS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Mismatch {
    pub inputs: Assignment,
    pub expected: Assignment,
    pub actual: Assignment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Verdict {
    pub vectors: usize,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<Mismatch>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

fn mask(width: usize) -> u128 {
    if width >= 128 {
        !0
    } else {
        (1 << width) - 1
    }
}

/// Every assignment when the inputs total at most `exhaustive_bits` bits,
/// otherwise `RANDOM_VECTORS` seeded random ones.
pub fn input_vectors(netlist: &Netlist, exhaustive_bits: usize, seed: u64) -> (Vec<Assignment>, bool) {
    let bits: usize = netlist.inputs().iter().map(|b| b.width()).sum();
    if bits <= exhaustive_bits {
        let all = (0..1u128 << bits)
            .map(|mut v| {
                let mut a = Assignment::new();
                for bus in netlist.inputs() {
                    a.insert(bus.name.clone(), v & mask(bus.width()));
                    v >>= bus.width();
                }
                a
            })
            .collect();
        return (all, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = (0..RANDOM_VECTORS)
        .map(|_| netlist.inputs().iter().map(|bus| (bus.name.clone(), rng.gen::<u128>() & mask(bus.width()))).collect())
        .collect();
    (random, false)
}

/// Compares the output buses of `a` and `b`, which must share input and
/// output bus names.
pub fn check_equivalent(a: &Netlist, b: &Netlist, seed: u64) -> Result<Verdict> {
    for bus in a.inputs() {
        if b.input_bus(&bus.name).map(|x| x.width()) != Some(bus.width()) {
            return Err(Error::InvalidNetlist(format!("input bus {} differs between netlists", bus.name)));
        }
    }
    let (vectors, exhaustive) = input_vectors(a, EQUIV_EXHAUSTIVE_BITS, seed);
    let x = Simulator::new(a)?.run_batch(&vectors)?;
    let y = Simulator::new(b)?.run_batch(&vectors)?;
    let mismatch = vectors
        .iter()
        .zip(x.into_iter().zip(y))
        .find(|(_, (x, y))| x != y)
        .map(|(v, (x, y))| Mismatch { inputs: v.clone(), expected: x, actual: y });
    Ok(Verdict { vectors: vectors.len(), exhaustive, mismatch })
}

/// Checks that output bus `p` equals `a * constant` or `a * b`.
pub fn check_product(netlist: &Netlist, operand: &Operand, seed: u64) -> Result<Verdict> {
    let p = netlist.output_bus("p").ok_or_else(|| Error::InvalidNetlist("no output bus p".into()))?;
    let out_mask = mask(p.width());
    netlist.input_bus("a").ok_or(Error::MissingInput("a".into()))?;
    if matches!(operand, Operand::Symbolic { .. }) {
        netlist.input_bus("b").ok_or(Error::MissingInput("b".into()))?;
    }
    let (vectors, exhaustive) = input_vectors(netlist, PRODUCT_EXHAUSTIVE_BITS, seed);
    let results = Simulator::new(netlist)?.run_batch(&vectors)?;
    let mismatch = vectors.iter().zip(results).find_map(|(v, r)| {
        let expect = match operand {
            Operand::Constant { value } => v["a"].wrapping_mul(*value as u128),
            Operand::Symbolic { .. } => v["a"].wrapping_mul(v["b"]),
        } & out_mask;
        (r["p"] != expect).then(|| Mismatch {
            inputs: v.clone(),
            expected: Assignment::from([("p".to_string(), expect)]),
            actual: Assignment::from([("p".to_string(), r["p"])]),
        })
    });
    Ok(Verdict { vectors: vectors.len(), exhaustive, mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lutmap::map_to_luts;
    use crate::ppgen::{generate_generic, generate_unrolled};
    use crate::reduce::{reduce, Algorithm};

    #[test]
    fn products_pass_and_a_flipped_lut_fails() {
        let m = generate_unrolled(6, 0b101101).unwrap();
        let r = reduce(&m, Algorithm::Dadda).unwrap();
        let v = check_product(&r.netlist, &m.matrix.operand, 1).unwrap();
        assert!(v.passed() && v.exhaustive && v.vectors == 64);
        let mapped = map_to_luts(&r.netlist, 6).unwrap().netlist;
        assert!(check_equivalent(&r.netlist, &mapped, 1).unwrap().passed());

        let g = generate_generic(3, 3).unwrap();
        let r = reduce(&g, Algorithm::Cascade).unwrap();
        assert!(check_product(&r.netlist, &g.matrix.operand, 1).unwrap().passed());
        // Claiming a different constant must be caught.
        let bad = check_product(&reduce(&m, Algorithm::Wallace).unwrap().netlist, &Operand::Constant { value: 0b101100 }, 1)
            .unwrap();
        assert!(!bad.passed());
    }

    #[test]
    fn wide_inputs_use_random_vectors() {
        let m = generate_unrolled(20, 0b1011).unwrap();
        let r = reduce(&m, Algorithm::Cascade).unwrap();
        let v = check_product(&r.netlist, &m.matrix.operand, 3).unwrap();
        assert!(v.passed());
        assert_eq!((v.vectors, v.exhaustive), (RANDOM_VECTORS, false));
    }

    #[test]
    fn mismatched_interfaces_are_rejected() {
        let a = generate_unrolled(4, 3).unwrap();
        let b = generate_unrolled(5, 3).unwrap();
        let ra = reduce(&a, Algorithm::Cascade).unwrap().netlist;
        let rb = reduce(&b, Algorithm::Cascade).unwrap().netlist;
        assert!(check_equivalent(&ra, &rb, 0).is_err());
    }
}
