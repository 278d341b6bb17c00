//! Fixtures shared by the benchmarks.

use doubleduty::harness::{gen_stress_circuit, synthesize, StressCircuitSpec};
use doubleduty::reduce::Algorithm;
use doubleduty::Netlist;

/// Constant multiplier with a dense, repetitive bit pattern.
pub const CONSTANT_16: u64 = 0b1011_0110_1101_1011;

pub fn multiplier(width: u32, algorithm: Algorithm) -> Netlist {
    synthesize(width, CONSTANT_16 & ((1 << width) - 1) | 1 << (width - 1), algorithm, true)
        .expect("valid multiplier")
        .netlist
}

pub fn stress(lut_count: usize) -> Netlist {
    gen_stress_circuit(&StressCircuitSpec { lut_count, ..Default::default() }).expect("valid stress spec")
}
