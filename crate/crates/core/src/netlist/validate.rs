use std::fmt;

use serde::Serialize;

use super::{ChainId, Netlist, NodeId, NodeKind, SignalId};
use crate::error::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    UnknownSignal { node: NodeId, signal: SignalId },
    Arity { node: NodeId, expected_inputs: Option<usize>, inputs: usize, expected_outputs: usize, outputs: usize },
    LutTooWide { node: NodeId, inputs: usize },
    TruthTableWidth { node: NodeId, inputs: usize },
    Cycle { node: NodeId },
    UndrivenOutput { bus: String, bit: usize },
    EmptyChain { chain: ChainId },
    ChainMember { chain: ChainId, node: NodeId },
    ChainShared { chain: ChainId, node: NodeId },
    ChainCarry { chain: ChainId, position: usize },
    ChainExclusivity { chain: ChainId, position: usize, consumer: NodeId },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnknownSignal { node, signal } => write!(f, "{node}: reads undriven signal {signal}"),
            Diagnostic::Arity { node, expected_inputs, inputs, expected_outputs, outputs } => write!(
                f,
                "{node}: arity violation, {inputs} inputs / {outputs} outputs (expected {} / {expected_outputs})",
                expected_inputs.map_or("any".to_string(), |e| e.to_string())
            ),
            Diagnostic::LutTooWide { node, inputs } => write!(f, "{node}: LUT with {inputs} inputs exceeds 6"),
            Diagnostic::TruthTableWidth { node, inputs } => {
                write!(f, "{node}: truth table has bits beyond 2^{inputs}")
            }
            Diagnostic::Cycle { node } => write!(f, "{node}: on a combinational cycle"),
            Diagnostic::UndrivenOutput { bus, bit } => write!(f, "output {bus}[{bit}] is not driven"),
            Diagnostic::EmptyChain { chain } => write!(f, "{chain}: empty chain"),
            Diagnostic::ChainMember { chain, node } => write!(f, "{chain}: member {node} is not a full adder"),
            Diagnostic::ChainShared { chain, node } => write!(f, "{chain}: member {node} already belongs to a chain"),
            Diagnostic::ChainCarry { chain, position } => {
                write!(f, "{chain}: carry-in of position {position} is not the previous carry-out")
            }
            Diagnostic::ChainExclusivity { chain, position, consumer } => write!(
                f,
                "{chain}: chain-exclusivity violation, intermediate carry at position {position} also feeds {consumer}"
            ),
        }
    }
}

/// Audits a netlist. Empty iff it is acyclic, every node has the right
/// arity, every chain is well formed and every primary output is driven.
pub fn validate(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let nsig = netlist.signal_count();

    let mut wiring_ok = true;
    for (i, node) in netlist.nodes().iter().enumerate() {
        let id = NodeId(i as u32);
        for &s in &node.inputs {
            if s.index() >= nsig {
                wiring_ok = false;
                diags.push(Diagnostic::UnknownSignal { node: id, signal: s });
            }
        }
        let (exp_in, exp_out) = node.kind.expected_arity();
        if exp_in.is_some_and(|e| e != node.inputs.len()) || exp_out != node.outputs.len() {
            diags.push(Diagnostic::Arity {
                node: id,
                expected_inputs: exp_in,
                inputs: node.inputs.len(),
                expected_outputs: exp_out,
                outputs: node.outputs.len(),
            });
        }
        if let NodeKind::Lut { truth } = node.kind {
            let k = node.inputs.len();
            if k > 6 {
                diags.push(Diagnostic::LutTooWide { node: id, inputs: k });
            } else if k < 6 && truth >> (1u32 << k) != 0 {
                diags.push(Diagnostic::TruthTableWidth { node: id, inputs: k });
            }
        }
    }

    if wiring_ok {
        if let Err(Error::Cycle(node)) = netlist.topo_order() {
            diags.push(Diagnostic::Cycle { node });
        }
    }

    for bus in netlist.outputs() {
        for (bit, s) in bus.signals.iter().enumerate() {
            if s.index() >= nsig {
                diags.push(Diagnostic::UndrivenOutput { bus: bus.name.clone(), bit });
            }
        }
    }

    diags.extend(validate_chains(netlist));
    diags
}

fn validate_chains(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut owner: Vec<Option<ChainId>> = vec![None; netlist.nodes().len()];
    let fanouts = netlist.fanouts();
    for (c, chain) in netlist.chains().iter().enumerate() {
        let cid = ChainId(c as u32);
        if chain.is_empty() {
            diags.push(Diagnostic::EmptyChain { chain: cid });
            continue;
        }
        let mut well_formed = true;
        for &m in &chain.members {
            let is_fa = netlist
                .nodes()
                .get(m.index())
                .is_some_and(|n| n.kind == NodeKind::FullAdder && n.inputs.len() == 3 && n.outputs.len() == 2);
            if !is_fa {
                well_formed = false;
                diags.push(Diagnostic::ChainMember { chain: cid, node: m });
                continue;
            }
            match owner[m.index()] {
                Some(_) => diags.push(Diagnostic::ChainShared { chain: cid, node: m }),
                None => owner[m.index()] = Some(cid),
            }
        }
        if !well_formed {
            continue;
        }
        let first = netlist.node(chain.members[0]);
        if first.inputs[2] != chain.cin0 {
            diags.push(Diagnostic::ChainCarry { chain: cid, position: 0 });
        }
        for (pos, pair) in chain.members.windows(2).enumerate() {
            let cout = netlist.node(pair[0]).outputs[1];
            let next = netlist.node(pair[1]);
            if next.inputs[2] != cout {
                diags.push(Diagnostic::ChainCarry { chain: cid, position: pos + 1 });
            }
            for &(consumer, port) in &fanouts[cout.index()] {
                if consumer != pair[1] || port != 2 {
                    diags.push(Diagnostic::ChainExclusivity { chain: cid, position: pos, consumer });
                }
            }
        }
        let last = chain.members.len() - 1;
        let inner_couts: Vec<SignalId> =
            chain.members[..last].iter().map(|m| netlist.node(*m).outputs[1]).collect();
        for bus in netlist.outputs() {
            for s in &bus.signals {
                if let Some(position) = inner_couts.iter().position(|c| c == s) {
                    diags.push(Diagnostic::ChainExclusivity { chain: cid, position, consumer: chain.members[position] });
                }
            }
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{AdderChain, GateOp, Netlist};

    #[test]
    fn empty_netlist_is_clean() {
        assert!(validate(&Netlist::new("empty")).is_empty());
    }

    #[test]
    fn two_input_full_adder_is_an_arity_violation() {
        let mut n = Netlist::new("bad");
        let a = n.add_input_bus("a", 2);
        n.push_node(NodeKind::FullAdder, vec![a[0], a[1]], 2);
        let d = validate(&n);
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0], Diagnostic::Arity { inputs: 2, .. }));
    }

    #[test]
    fn tapped_intermediate_carry_breaks_exclusivity() {
        let mut n = Netlist::new("tap");
        let a = n.add_input_bus("a", 2);
        let b = n.add_input_bus("b", 2);
        let zero = n.constant(false);
        let out = n.add_chain(&a, &b, zero);
        let inner = n.node(n.chain(out.id).members[0]).outputs[1];
        let g = n.gate(GateOp::Not, &[inner]);
        n.set_output_bus("y", vec![g]);
        let d = validate(&n);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(matches!(d[0], Diagnostic::ChainExclusivity { position: 0, .. }));
    }

    #[test]
    fn broken_carry_link_and_foreign_member() {
        let mut n = Netlist::new("links");
        let a = n.add_input_bus("a", 3);
        let zero = n.constant(false);
        let (_, c0) = n.full_adder(a[0], a[1], zero);
        let _ = c0;
        let f2 = n.push_node(NodeKind::FullAdder, vec![a[1], a[2], zero], 2);
        let f1 = NodeId(f2.0 - 1);
        let g = n.push_node(NodeKind::Gate { op: GateOp::Not }, vec![a[0]], 1);
        n.push_chain(AdderChain { members: vec![f1, f2], cin0: zero });
        n.push_chain(AdderChain { members: vec![g], cin0: zero });
        let d = validate(&n);
        assert!(d.iter().any(|x| matches!(x, Diagnostic::ChainCarry { position: 1, .. })));
        assert!(d.iter().any(|x| matches!(x, Diagnostic::ChainMember { .. })));
    }

    #[test]
    fn undriven_output_and_bad_truth_table() {
        let mut n = Netlist::new("u");
        let a = n.add_input_bus("a", 1);
        n.push_node(NodeKind::Lut { truth: 0b1_0000 }, vec![a[0], a[0]], 1);
        n.set_output_bus("y", vec![SignalId(999)]);
        let d = validate(&n);
        assert!(d.iter().any(|x| matches!(x, Diagnostic::UndrivenOutput { bit: 0, .. })));
        assert!(d.iter().any(|x| matches!(x, Diagnostic::TruthTableWidth { .. })));
    }

    #[test]
    fn cycle_is_reported() {
        let mut n = Netlist::new("cyc");
        n.push_node(NodeKind::Gate { op: GateOp::Not }, vec![SignalId(1)], 1);
        n.push_node(NodeKind::Gate { op: GateOp::Not }, vec![SignalId(0)], 1);
        assert!(validate(&n).iter().any(|d| matches!(d, Diagnostic::Cycle { .. })));
    }
}
