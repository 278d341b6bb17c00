use std::collections::BTreeMap;

use serde::Serialize;

use super::{Netlist, NodeKind};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NetlistStats {
    pub full_adders: usize,
    /// Full adders that are not members of any chain.
    pub free_full_adders: usize,
    pub half_adders: usize,
    pub gates: usize,
    pub luts: usize,
    pub chains: usize,
    /// Chain length to number of chains of that length.
    pub chain_lengths: BTreeMap<usize, usize>,
}

pub fn stats(netlist: &Netlist) -> NetlistStats {
    let mut s = NetlistStats { chains: netlist.chains().len(), ..Default::default() };
    for node in netlist.nodes() {
        match node.kind {
            NodeKind::FullAdder => s.full_adders += 1,
            NodeKind::HalfAdder => s.half_adders += 1,
            NodeKind::Gate { .. } => s.gates += 1,
            NodeKind::Lut { .. } => s.luts += 1,
            _ => {}
        }
    }
    let mut chained = 0;
    for chain in netlist.chains() {
        *s.chain_lengths.entry(chain.len()).or_default() += 1;
        chained += chain.len();
    }
    s.free_full_adders = s.full_adders.saturating_sub(chained);
    s
}
