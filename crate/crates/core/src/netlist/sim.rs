use std::collections::BTreeMap;

use super::{Netlist, NodeId, NodeKind};
use crate::error::{Error, Result};

/// Bus name to unsigned little-endian value.
pub type Assignment = BTreeMap<String, u128>;

/// Evaluates one input assignment.
pub fn simulate(netlist: &Netlist, assignment: &Assignment) -> Result<Assignment> {
    Simulator::new(netlist)?.run(assignment)
}

/// A netlist with a precomputed evaluation order. Evaluation is bit-parallel:
/// every signal holds a 64-lane word, so batches run 64 vectors at a time.
pub struct Simulator<'a> {
    netlist: &'a Netlist,
    order: Vec<NodeId>,
}

impl<'a> Simulator<'a> {
    pub fn new(netlist: &'a Netlist) -> Result<Self> {
        for bus in netlist.inputs().iter().chain(netlist.outputs()) {
            if bus.width() > 128 {
                return Err(Error::BusTooWide { bus: bus.name.clone(), width: bus.width() });
            }
        }
        let order = netlist.topo_order()?;
        Ok(Simulator { netlist, order })
    }

    pub fn run(&self, assignment: &Assignment) -> Result<Assignment> {
        Ok(self.run_batch(std::slice::from_ref(assignment))?.remove(0))
    }

    pub fn run_batch(&self, assignments: &[Assignment]) -> Result<Vec<Assignment>> {
        let mut results = Vec::with_capacity(assignments.len());
        for chunk in assignments.chunks(64) {
            let mut words = vec![0u64; self.netlist.signal_count()];
            for bus in self.netlist.inputs() {
                let width = bus.width();
                for (lane, asg) in chunk.iter().enumerate() {
                    let value = *asg.get(&bus.name).ok_or_else(|| Error::MissingInput(bus.name.clone()))?;
                    if width < 128 && value >> width != 0 {
                        return Err(Error::ValueTooWide { bus: bus.name.clone(), width, value });
                    }
                    for (bit, s) in bus.signals.iter().enumerate() {
                        if (value >> bit) & 1 == 1 {
                            words[s.index()] |= 1 << lane;
                        }
                    }
                }
            }
            self.eval_words(&mut words);
            for lane in 0..chunk.len() {
                let out = self
                    .netlist
                    .outputs()
                    .iter()
                    .map(|bus| {
                        let v = bus
                            .signals
                            .iter()
                            .enumerate()
                            .fold(0u128, |acc, (bit, s)| acc | ((((words[s.index()] >> lane) & 1) as u128) << bit));
                        (bus.name.clone(), v)
                    })
                    .collect();
                results.push(out);
            }
        }
        Ok(results)
    }

    /// Evaluates all nodes given primary-input words already in `words`.
    pub fn eval_words(&self, words: &mut [u64]) {
        let mut scratch = Vec::with_capacity(6);
        for &id in &self.order {
            let node = self.netlist.node(id);
            scratch.clear();
            scratch.extend(node.inputs.iter().map(|s| words[s.index()]));
            match &node.kind {
                NodeKind::PrimaryInput { .. } => {}
                NodeKind::Const { value } => words[node.outputs[0].index()] = if *value { !0 } else { 0 },
                NodeKind::Gate { op } => words[node.outputs[0].index()] = op.eval_words(&scratch),
                NodeKind::Lut { truth } => words[node.outputs[0].index()] = eval_lut_words(*truth, &scratch),
                NodeKind::FullAdder => {
                    let (a, b, c) = (scratch[0], scratch[1], scratch[2]);
                    words[node.outputs[0].index()] = a ^ b ^ c;
                    words[node.outputs[1].index()] = (a & b) | (c & (a ^ b));
                }
                NodeKind::HalfAdder => {
                    let (a, b) = (scratch[0], scratch[1]);
                    words[node.outputs[0].index()] = a ^ b;
                    words[node.outputs[1].index()] = a & b;
                }
            }
        }
    }
}

/// Truth-table lookup across 64 lanes, by summing minterms.
pub(crate) fn eval_lut_words(truth: u64, inputs: &[u64]) -> u64 {
    let mut out = 0u64;
    for row in 0..(1usize << inputs.len()) {
        if (truth >> row) & 1 == 0 {
            continue;
        }
        let mut term = !0u64;
        for (i, w) in inputs.iter().enumerate() {
            term &= if (row >> i) & 1 == 1 { *w } else { !*w };
        }
        out |= term;
    }
    out
}
