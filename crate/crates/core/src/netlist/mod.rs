//! Combinational netlist model.
//!
//! A [`Netlist`] is a list of nodes (primary inputs, constants, gates, LUTs and
//! single-bit adders) connected through [`SignalId`]s. Every signal has exactly
//! one driver: the node output that allocated it. Full adders may be grouped
//! into [`AdderChain`]s, whose intermediate carries are private to the chain.
//!
//! Nodes are only ever appended. Transformations (dedup, LUT mapping) build a
//! fresh netlist instead of editing one in place.

mod blif;
mod sim;
mod stats;
mod validate;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use blif::{export_blif, parse_blif};
pub use sim::{simulate, Assignment, Simulator};
pub(crate) use sim::eval_lut_words;
pub use stats::{stats, NetlistStats};
pub use validate::{validate, Diagnostic};

/// Current version of the JSON netlist schema.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChainId(pub u32);

impl SignalId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ChainId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for ChainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateOp {
    Not,
    And2,
    Or2,
    Xor2,
    /// Inputs are `(sel, a, b)`; the output is `b` when `sel` is high.
    Mux2,
}

impl GateOp {
    pub fn arity(self) -> usize {
        match self {
            GateOp::Not => 1,
            GateOp::And2 | GateOp::Or2 | GateOp::Xor2 => 2,
            GateOp::Mux2 => 3,
        }
    }

    /// Bit-parallel evaluation over 64 lanes.
    pub fn eval_words(self, inputs: &[u64]) -> u64 {
        match self {
            GateOp::Not => !inputs[0],
            GateOp::And2 => inputs[0] & inputs[1],
            GateOp::Or2 => inputs[0] | inputs[1],
            GateOp::Xor2 => inputs[0] ^ inputs[1],
            GateOp::Mux2 => (inputs[0] & inputs[2]) | (!inputs[0] & inputs[1]),
        }
    }
}

/// What a node computes. LUT arity is the number of connected inputs; the
/// truth table is indexed by `sum(input_i << i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    PrimaryInput { bus: String, bit: u32 },
    Const { value: bool },
    Gate { op: GateOp },
    Lut { truth: u64 },
    /// Inputs `(a, b, cin)`, outputs `(sum, cout)`.
    FullAdder,
    /// Inputs `(a, b)`, outputs `(sum, cout)`.
    HalfAdder,
}

impl NodeKind {
    /// `(inputs, outputs)` the kind requires, `None` where the count is free.
    pub fn expected_arity(&self) -> (Option<usize>, usize) {
        match self {
            NodeKind::PrimaryInput { .. } | NodeKind::Const { .. } => (Some(0), 1),
            NodeKind::Gate { op } => (Some(op.arity()), 1),
            NodeKind::Lut { .. } => (None, 1),
            NodeKind::FullAdder => (Some(3), 2),
            NodeKind::HalfAdder => (Some(2), 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    #[serde(flatten)]
    pub kind: NodeKind,
    pub inputs: Vec<SignalId>,
    pub outputs: Vec<SignalId>,
}

/// Full adders linked through dedicated carry wiring. Member `i + 1` takes
/// its carry-in from the carry-out of member `i`; member 0 takes `cin0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdderChain {
    pub members: Vec<NodeId>,
    pub cin0: SignalId,
}

impl AdderChain {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A named little-endian group of signals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bus {
    pub name: String,
    pub signals: Vec<SignalId>,
}

impl Bus {
    pub fn width(&self) -> usize {
        self.signals.len()
    }
}

/// Result of [`Netlist::add_chain`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainOutput {
    pub id: ChainId,
    pub sums: Vec<SignalId>,
    pub cout: SignalId,
}

#[derive(Clone, Debug, Default)]
pub struct Netlist {
    name: String,
    nodes: Vec<Node>,
    chains: Vec<AdderChain>,
    inputs: Vec<Bus>,
    outputs: Vec<Bus>,
    /// `(node, output index)` driving each signal.
    drivers: Vec<(NodeId, u8)>,
    consts: [Option<SignalId>; 2],
}

impl Netlist {
    pub fn new(name: impl Into<String>) -> Self {
        Netlist {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn chains(&self) -> &[AdderChain] {
        &self.chains
    }

    pub fn chain(&self, id: ChainId) -> &AdderChain {
        &self.chains[id.index()]
    }

    pub fn inputs(&self) -> &[Bus] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Bus] {
        &self.outputs
    }

    pub fn input_bus(&self, name: &str) -> Option<&Bus> {
        self.inputs.iter().find(|b| b.name == name)
    }

    pub fn output_bus(&self, name: &str) -> Option<&Bus> {
        self.outputs.iter().find(|b| b.name == name)
    }

    pub fn signal_count(&self) -> usize {
        self.drivers.len()
    }

    pub fn driver(&self, signal: SignalId) -> (NodeId, usize) {
        let (node, port) = self.drivers[signal.index()];
        (node, port as usize)
    }

    pub fn driver_node(&self, signal: SignalId) -> &Node {
        self.node(self.drivers[signal.index()].0)
    }

    /// Value of a signal driven by a constant node.
    pub fn const_value(&self, signal: SignalId) -> Option<bool> {
        match self.driver_node(signal).kind {
            NodeKind::Const { value } => Some(value),
            _ => None,
        }
    }

    /// Appends a node and allocates its output signals. No arity checking;
    /// use [`validate`] to audit hand-built netlists.
    pub fn push_node(&mut self, kind: NodeKind, inputs: Vec<SignalId>, output_count: usize) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let outputs = (0..output_count)
            .map(|port| {
                let s = SignalId(self.drivers.len() as u32);
                self.drivers.push((id, port as u8));
                s
            })
            .collect();
        self.nodes.push(Node { kind, inputs, outputs });
        id
    }

    /// Registers a chain over existing full-adder nodes without checking it.
    pub fn push_chain(&mut self, chain: AdderChain) -> ChainId {
        self.chains.push(chain);
        ChainId(self.chains.len() as u32 - 1)
    }

    pub fn add_input_bus(&mut self, name: impl Into<String>, width: usize) -> Vec<SignalId> {
        let name = name.into();
        let signals: Vec<SignalId> = (0..width)
            .map(|bit| {
                let kind = NodeKind::PrimaryInput { bus: name.clone(), bit: bit as u32 };
                let n = self.push_node(kind, Vec::new(), 1);
                self.nodes[n.index()].outputs[0]
            })
            .collect();
        self.inputs.push(Bus { name, signals: signals.clone() });
        signals
    }

    pub fn set_output_bus(&mut self, name: impl Into<String>, signals: Vec<SignalId>) {
        let name = name.into();
        if let Some(bus) = self.outputs.iter_mut().find(|b| b.name == name) {
            bus.signals = signals;
        } else {
            self.outputs.push(Bus { name, signals });
        }
    }

    /// Shared constant driver for `value`.
    pub fn constant(&mut self, value: bool) -> SignalId {
        if let Some(s) = self.consts[value as usize] {
            return s;
        }
        let n = self.push_node(NodeKind::Const { value }, Vec::new(), 1);
        let s = self.nodes[n.index()].outputs[0];
        self.consts[value as usize] = Some(s);
        s
    }

    pub fn gate(&mut self, op: GateOp, inputs: &[SignalId]) -> SignalId {
        assert_eq!(inputs.len(), op.arity(), "{op:?} arity");
        let n = self.push_node(NodeKind::Gate { op }, inputs.to_vec(), 1);
        self.nodes[n.index()].outputs[0]
    }

    pub fn not(&mut self, a: SignalId) -> SignalId {
        self.gate(GateOp::Not, &[a])
    }

    pub fn and(&mut self, a: SignalId, b: SignalId) -> SignalId {
        self.gate(GateOp::And2, &[a, b])
    }

    pub fn or(&mut self, a: SignalId, b: SignalId) -> SignalId {
        self.gate(GateOp::Or2, &[a, b])
    }

    pub fn xor(&mut self, a: SignalId, b: SignalId) -> SignalId {
        self.gate(GateOp::Xor2, &[a, b])
    }

    pub fn mux(&mut self, sel: SignalId, a: SignalId, b: SignalId) -> SignalId {
        self.gate(GateOp::Mux2, &[sel, a, b])
    }

    pub fn lut(&mut self, truth: u64, inputs: &[SignalId]) -> SignalId {
        assert!(inputs.len() <= 6, "LUT with {} inputs", inputs.len());
        let n = self.push_node(NodeKind::Lut { truth }, inputs.to_vec(), 1);
        self.nodes[n.index()].outputs[0]
    }

    pub fn full_adder(&mut self, a: SignalId, b: SignalId, cin: SignalId) -> (SignalId, SignalId) {
        let n = self.push_node(NodeKind::FullAdder, vec![a, b, cin], 2);
        let out = &self.nodes[n.index()].outputs;
        (out[0], out[1])
    }

    pub fn half_adder(&mut self, a: SignalId, b: SignalId) -> (SignalId, SignalId) {
        let n = self.push_node(NodeKind::HalfAdder, vec![a, b], 2);
        let out = &self.nodes[n.index()].outputs;
        (out[0], out[1])
    }

    /// Builds a ripple chain computing `a + b + cin0` over `a.len()` bits.
    pub fn add_chain(&mut self, a: &[SignalId], b: &[SignalId], cin0: SignalId) -> ChainOutput {
        assert_eq!(a.len(), b.len(), "chain operands differ in width");
        assert!(!a.is_empty(), "empty adder chain");
        let mut carry = cin0;
        let mut members = Vec::with_capacity(a.len());
        let mut sums = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let n = self.push_node(NodeKind::FullAdder, vec![x, y, carry], 2);
            let out = &self.nodes[n.index()].outputs;
            sums.push(out[0]);
            carry = out[1];
            members.push(n);
        }
        let id = self.push_chain(AdderChain { members, cin0 });
        ChainOutput { id, sums, cout: carry }
    }

    /// Chain each full adder belongs to, with its position.
    pub fn chain_membership(&self) -> Vec<Option<(ChainId, usize)>> {
        let mut out = vec![None; self.nodes.len()];
        for (c, chain) in self.chains.iter().enumerate() {
            for (pos, m) in chain.members.iter().enumerate() {
                if let Some(slot) = out.get_mut(m.index()) {
                    *slot = Some((ChainId(c as u32), pos));
                }
            }
        }
        out
    }

    /// Consumers of every signal, as `(node, input index)`.
    pub fn fanouts(&self) -> Vec<Vec<(NodeId, usize)>> {
        let mut out = vec![Vec::new(); self.drivers.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            for (port, s) in node.inputs.iter().enumerate() {
                if let Some(list) = out.get_mut(s.index()) {
                    list.push((NodeId(i as u32), port));
                }
            }
        }
        out
    }

    /// Deterministic topological order (smallest ready node id first).
    pub fn topo_order(&self) -> Result<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut pending = vec![0usize; n];
        let mut users: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, node) in self.nodes.iter().enumerate() {
            for s in &node.inputs {
                if s.index() >= self.drivers.len() {
                    return Err(Error::InvalidNetlist(format!("node n{i} reads unknown signal {s}")));
                }
                let d = self.drivers[s.index()].0.index();
                pending[i] += 1;
                users[d].push(i as u32);
            }
        }
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<u32>> = (0..n as u32)
            .filter(|&i| pending[i as usize] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(i)) = ready.pop() {
            order.push(NodeId(i));
            for &u in &users[i as usize] {
                pending[u as usize] -= 1;
                if pending[u as usize] == 0 {
                    ready.push(std::cmp::Reverse(u));
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| pending[i] > 0).unwrap_or(0);
            return Err(Error::Cycle(NodeId(stuck as u32)));
        }
        Ok(order)
    }

    /// Appends `other` under a bus-name prefix, returning the signal map
    /// (indexed by `other`'s signal ids).
    pub fn append(&mut self, other: &Netlist, prefix: &str) -> Vec<SignalId> {
        let mut map = vec![SignalId(u32::MAX); other.signal_count()];
        let order = other.topo_order().expect("appending a cyclic netlist");
        let mut node_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for bus in &other.inputs {
            let fresh = self.add_input_bus(format!("{prefix}{}", bus.name), bus.width());
            for (old, new) in bus.signals.iter().zip(fresh) {
                map[old.index()] = new;
            }
        }
        for id in order {
            let node = other.node(id);
            match &node.kind {
                NodeKind::PrimaryInput { .. } => continue,
                NodeKind::Const { value } => {
                    map[node.outputs[0].index()] = self.constant(*value);
                    continue;
                }
                _ => {}
            }
            // Topological order copies chain members before their carry consumers.
            let inputs = node.inputs.iter().map(|s| map[s.index()]).collect();
            let new_id = self.push_node(node.kind.clone(), inputs, node.outputs.len());
            for (old, new) in node.outputs.iter().zip(self.nodes[new_id.index()].outputs.clone()) {
                map[old.index()] = new;
            }
            node_map.insert(id, new_id);
        }
        for chain in &other.chains {
            let members = chain.members.iter().map(|m| node_map[m]).collect();
            self.push_chain(AdderChain { members, cin0: map[chain.cin0.index()] });
        }
        for bus in &other.outputs {
            let signals = bus.signals.iter().map(|s| map[s.index()]).collect();
            self.set_output_bus(format!("{prefix}{}", bus.name), signals);
        }
        map
    }

    /// Copies the nodes flagged in `keep`, reading every input through
    /// `canon` first. Chains are kept when all their members are.
    pub fn rebuild(&self, keep: &[bool], canon: &[SignalId]) -> Netlist {
        let mut out = Netlist::new(self.name.clone());
        let mut map = vec![SignalId(u32::MAX); self.signal_count()];
        for bus in &self.inputs {
            let fresh = out.add_input_bus(bus.name.clone(), bus.width());
            for (old, new) in bus.signals.iter().zip(fresh) {
                map[old.index()] = new;
            }
        }
        let mut node_map = vec![None; self.nodes.len()];
        for id in self.topo_order().expect("rebuilding a cyclic netlist") {
            let node = self.node(id);
            if !keep[id.index()] {
                continue;
            }
            match &node.kind {
                NodeKind::PrimaryInput { .. } => continue,
                NodeKind::Const { value } => {
                    map[node.outputs[0].index()] = out.constant(*value);
                    continue;
                }
                _ => {}
            }
            let inputs = node.inputs.iter().map(|s| map[canon[s.index()].index()]).collect();
            let new_id = out.push_node(node.kind.clone(), inputs, node.outputs.len());
            for (old, new) in node.outputs.iter().zip(out.nodes[new_id.index()].outputs.clone()) {
                map[old.index()] = new;
            }
            node_map[id.index()] = Some(new_id);
        }
        for chain in &self.chains {
            let members: Option<Vec<NodeId>> = chain.members.iter().map(|m| node_map[m.index()]).collect();
            if let Some(members) = members {
                let cin0 = map[canon[chain.cin0.index()].index()];
                out.push_chain(AdderChain { members, cin0 });
            }
        }
        for bus in &self.outputs {
            let signals = bus.signals.iter().map(|s| map[canon[s.index()].index()]).collect();
            out.set_output_bus(bus.name.clone(), signals);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = NetlistDoc {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            chains: self.chains.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetlistDoc = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(doc.schema_version));
        }
        Self::from_parts(doc.name, doc.nodes, doc.chains, doc.inputs, doc.outputs)
    }

    /// Reassembles a netlist, checking that signal ids are dense and singly driven.
    pub fn from_parts(
        name: String,
        nodes: Vec<Node>,
        chains: Vec<AdderChain>,
        inputs: Vec<Bus>,
        outputs: Vec<Bus>,
    ) -> Result<Self> {
        let total: usize = nodes.iter().map(|n| n.outputs.len()).sum();
        let mut drivers: Vec<Option<(NodeId, u8)>> = vec![None; total];
        let mut consts = [None, None];
        for (i, node) in nodes.iter().enumerate() {
            for (port, s) in node.outputs.iter().enumerate() {
                match drivers.get_mut(s.index()) {
                    Some(slot @ None) => *slot = Some((NodeId(i as u32), port as u8)),
                    Some(Some(_)) => {
                        return Err(Error::InvalidNetlist(format!("signal {s} has more than one driver")))
                    }
                    None => return Err(Error::InvalidNetlist(format!("signal id {s} is not dense"))),
                }
            }
            if let NodeKind::Const { value } = node.kind {
                consts[value as usize].get_or_insert(node.outputs[0]);
            }
        }
        let drivers = drivers.into_iter().map(|d| d.expect("dense by counting")).collect();
        let netlist = Netlist { name, nodes, chains, inputs, outputs, drivers, consts };
        for bus in netlist.inputs.iter().chain(&netlist.outputs) {
            if let Some(s) = bus.signals.iter().find(|s| s.index() >= netlist.drivers.len()) {
                return Err(Error::InvalidNetlist(format!("bus `{}` references unknown signal {s}", bus.name)));
            }
        }
        Ok(netlist)
    }

    /// Signals in the transitive fan-in of the primary outputs.
    pub fn live_nodes(&self) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        let mut queue: VecDeque<NodeId> = self
            .outputs
            .iter()
            .flat_map(|b| b.signals.iter())
            .map(|s| self.drivers[s.index()].0)
            .collect();
        let membership = self.chain_membership();
        while let Some(n) = queue.pop_front() {
            if live[n.index()] {
                continue;
            }
            live[n.index()] = true;
            // A chain lives or dies as a whole.
            if let Some((c, _)) = membership[n.index()] {
                queue.extend(self.chains[c.index()].members.iter().copied());
            }
            for s in &self.nodes[n.index()].inputs {
                queue.push_back(self.drivers[s.index()].0);
            }
        }
        live
    }
}

#[derive(Serialize, Deserialize)]
struct NetlistDoc {
    schema_version: u32,
    name: String,
    nodes: Vec<Node>,
    chains: Vec<AdderChain>,
    inputs: Vec<Bus>,
    outputs: Vec<Bus>,
}
