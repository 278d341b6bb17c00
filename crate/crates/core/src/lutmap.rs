//! Technology mapping of gate-level logic into k-input LUTs. Adder chains
//! pass through untouched; everything else is lowered to LUTs.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netlist::{AdderChain, GateOp, Netlist, NodeId, NodeKind, SignalId};

/// Truth-table columns for up to six variables.
const VAR: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

fn table_mask(n: usize) -> u64 {
    if n >= 6 {
        !0
    } else {
        (1u64 << (1 << n)) - 1
    }
}

/// Mapped netlist plus the logic depth of every LUT.
#[derive(Clone, Debug)]
pub struct MappedNetlist {
    pub netlist: Netlist,
    pub k: usize,
    pub lut_levels: BTreeMap<NodeId, u32>,
}

impl MappedNetlist {
    pub fn depth(&self) -> u32 {
        self.lut_levels.values().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Value {
    Const(bool),
    Sig(SignalId),
}

/// A single-output logic function of its inputs.
#[derive(Clone, Debug)]
struct Func {
    truth: u64,
    inputs: Vec<SignalId>,
}

#[derive(Clone, Debug)]
struct Cut {
    leaves: Vec<SignalId>,
    level: u32,
}

fn gate_truth(op: GateOp) -> u64 {
    op.eval_words(&VAR[..op.arity()]) & table_mask(op.arity())
}

/// Substitutes constants, merges repeated inputs and drops inputs outside the
/// support.
fn simplify(truth: u64, inputs: &[Value]) -> std::result::Result<Func, bool> {
    let mut vars: Vec<SignalId> = Vec::new();
    let word = |vars: &mut Vec<SignalId>, v: &Value| match v {
        Value::Const(b) => {
            if *b {
                !0
            } else {
                0
            }
        }
        Value::Sig(s) => {
            let pos = vars.iter().position(|x| x == s).unwrap_or_else(|| {
                vars.push(*s);
                vars.len() - 1
            });
            VAR[pos]
        }
    };
    let words: Vec<u64> = inputs.iter().map(|v| word(&mut vars, v)).collect();
    let out = crate::netlist::eval_lut_words(truth, &words) & table_mask(vars.len());
    let support: Vec<usize> = (0..vars.len())
        .filter(|&i| (0..1usize << vars.len()).any(|r| r >> i & 1 == 0 && (out >> r & 1) != (out >> (r | 1 << i) & 1)))
        .collect();
    if support.is_empty() {
        return Err(out & 1 == 1);
    }
    let mut remap = [0u64; 6];
    for (new, &old) in support.iter().enumerate() {
        remap[old] = VAR[new];
    }
    let truth = crate::netlist::eval_lut_words(out, &remap[..vars.len()]) & table_mask(support.len());
    Ok(Func { truth, inputs: support.iter().map(|&i| vars[i]).collect() })
}

/// Maps every gate, LUT and free adder of `netlist` into LUTs of at most `k`
/// inputs. Chains are kept verbatim; logic outside the fan-in of the outputs
/// and live chains is dropped.
pub fn map_to_luts(netlist: &Netlist, k: usize) -> Result<MappedNetlist> {
    if !(4..=6).contains(&k) {
        return Err(Error::LutSize(k));
    }
    if is_mapped(netlist, k) {
        let lut_levels = lut_levels(netlist)?;
        return Ok(MappedNetlist { netlist: netlist.clone(), k, lut_levels });
    }
    let order = netlist.topo_order()?;
    let membership = netlist.chain_membership();
    let n_sig = netlist.signal_count();

    // Constant propagation: every signal resolves to a constant, another
    // signal, or itself.
    let mut value: Vec<Value> = (0..n_sig as u32).map(|s| Value::Sig(SignalId(s))).collect();
    let mut funcs: Vec<Option<Func>> = vec![None; n_sig];
    for &id in &order {
        let node = netlist.node(id);
        let ins: Vec<Value> = node.inputs.iter().map(|s| value[s.index()]).collect();
        let lowered: Vec<u64> = match &node.kind {
            NodeKind::Const { value: v } => {
                value[node.outputs[0].index()] = Value::Const(*v);
                continue;
            }
            NodeKind::PrimaryInput { .. } => continue,
            NodeKind::FullAdder if membership[id.index()].is_some() => continue,
            NodeKind::Gate { op } => vec![gate_truth(*op)],
            NodeKind::Lut { truth } => vec![*truth],
            NodeKind::FullAdder => vec![0x96, 0xE8],
            NodeKind::HalfAdder => vec![0x6, 0x8],
        };
        for (truth, out) in lowered.into_iter().zip(&node.outputs) {
            match simplify(truth, &ins) {
                Err(b) => value[out.index()] = Value::Const(b),
                Ok(f) if f.inputs.len() == 1 && f.truth == 0b10 => value[out.index()] = Value::Sig(f.inputs[0]),
                Ok(f) => {
                    if f.inputs.len() > k {
                        return Err(Error::FaninExceedsK { node: id, fanin: f.inputs.len(), k });
                    }
                    funcs[out.index()] = Some(f);
                }
            }
        }
    }

    // Depth-oriented cuts, in topological order.
    let mut cuts: Vec<Option<Cut>> = vec![None; n_sig];
    let level_of = |cuts: &[Option<Cut>], s: SignalId| cuts[s.index()].as_ref().map_or(0, |c| c.level);
    for &id in &order {
        for out in &netlist.node(id).outputs {
            let Some(f) = &funcs[out.index()] else { continue };
            let mut leaves = f.inputs.clone();
            leaves.sort();
            let mut level = 1 + leaves.iter().map(|s| level_of(&cuts, *s)).max().unwrap_or(0);
            loop {
                let mut best: Option<(u32, usize, Vec<SignalId>)> = None;
                for &u in &leaves {
                    let Some(cu) = &cuts[u.index()] else { continue };
                    let mut merged: Vec<SignalId> = leaves.iter().copied().filter(|&x| x != u).collect();
                    merged.extend(&cu.leaves);
                    merged.sort();
                    merged.dedup();
                    if merged.len() > k {
                        continue;
                    }
                    let lv = 1 + merged.iter().map(|s| level_of(&cuts, *s)).max().unwrap_or(0);
                    if best.as_ref().is_none_or(|(bl, bn, _)| (lv, merged.len()) < (*bl, *bn)) {
                        best = Some((lv, merged.len(), merged));
                    }
                }
                match best {
                    Some((lv, _, merged)) => {
                        level = lv;
                        leaves = merged;
                    }
                    None => break,
                }
            }
            cuts[out.index()] = Some(Cut { leaves, level });
        }
    }

    // Cover: LUT roots and chains needed by the outputs.
    let resolve = |s: SignalId| value[s.index()];
    let mut needed = vec![false; n_sig];
    let mut chain_live = vec![false; netlist.chains().len()];
    let mut work: Vec<SignalId> = netlist.outputs().iter().flat_map(|b| b.signals.iter().copied()).collect();
    while let Some(s) = work.pop() {
        let Value::Sig(s) = resolve(s) else { continue };
        if needed[s.index()] {
            continue;
        }
        needed[s.index()] = true;
        if let Some(cut) = &cuts[s.index()] {
            work.extend(&cut.leaves);
        } else if let Some((c, _)) = membership[netlist.driver(s).0.index()] {
            if !chain_live[c.index()] {
                chain_live[c.index()] = true;
                let chain = netlist.chain(c);
                work.push(chain.cin0);
                for m in &chain.members {
                    work.extend(&netlist.node(*m).inputs[..2]);
                }
            }
        }
    }

    let mut out = Netlist::new(netlist.name());
    let mut map = vec![SignalId(u32::MAX); n_sig];
    for bus in netlist.inputs() {
        let fresh = out.add_input_bus(bus.name.clone(), bus.width());
        for (old, new) in bus.signals.iter().zip(fresh) {
            map[old.index()] = new;
        }
    }
    let lookup = |out: &mut Netlist, map: &[SignalId], s: SignalId| match resolve(s) {
        Value::Const(b) => out.constant(b),
        Value::Sig(t) => map[t.index()],
    };
    let mut chain_members: Vec<Vec<NodeId>> = vec![Vec::new(); netlist.chains().len()];
    for &id in &order {
        let node = netlist.node(id);
        if let Some((c, pos)) = membership[id.index()] {
            if !chain_live[c.index()] {
                continue;
            }
            let inputs = node.inputs.iter().map(|s| lookup(&mut out, &map, *s)).collect();
            let new_id = out.push_node(NodeKind::FullAdder, inputs, 2);
            let outs = out.node(new_id).outputs.clone();
            map[node.outputs[0].index()] = outs[0];
            map[node.outputs[1].index()] = outs[1];
            debug_assert_eq!(chain_members[c.index()].len(), pos);
            chain_members[c.index()].push(new_id);
            continue;
        }
        for s in &node.outputs {
            if !needed[s.index()] {
                continue;
            }
            let Some(cut) = &cuts[s.index()] else { continue };
            let mut words: HashMap<SignalId, u64> =
                cut.leaves.iter().enumerate().map(|(i, l)| (*l, VAR[i])).collect();
            let truth = cone_word(*s, &funcs, &mut words) & table_mask(cut.leaves.len());
            let inputs: Vec<SignalId> = cut.leaves.iter().map(|l| lookup(&mut out, &map, *l)).collect();
            map[s.index()] = out.lut(truth, &inputs);
        }
    }
    for (c, members) in chain_members.into_iter().enumerate() {
        if chain_live[c] {
            let cin0 = out.node(members[0]).inputs[2];
            out.push_chain(AdderChain { members, cin0 });
        }
    }
    for bus in netlist.outputs() {
        let signals = bus.signals.iter().map(|s| lookup(&mut out, &map, *s)).collect();
        out.set_output_bus(bus.name.clone(), signals);
    }
    let lut_levels = lut_levels(&out)?;
    Ok(MappedNetlist { netlist: out, k, lut_levels })
}

/// Evaluates the cone rooted at `s` over the leaf words already in `words`.
fn cone_word(s: SignalId, funcs: &[Option<Func>], words: &mut HashMap<SignalId, u64>) -> u64 {
    if let Some(w) = words.get(&s) {
        return *w;
    }
    let f = funcs[s.index()].as_ref().expect("cone interior is logic");
    let ins: Vec<u64> = f.inputs.iter().map(|i| cone_word(*i, funcs, words)).collect();
    let w = crate::netlist::eval_lut_words(f.truth, &ins);
    words.insert(s, w);
    w
}

/// True when `netlist` is already in mapped form for `k`: only LUTs of at
/// most `k` distinct non-constant inputs outside chains, and no dead logic.
fn is_mapped(netlist: &Netlist, k: usize) -> bool {
    let membership = netlist.chain_membership();
    let live = netlist.live_nodes();
    netlist.nodes().iter().enumerate().all(|(i, node)| match &node.kind {
        NodeKind::PrimaryInput { .. } | NodeKind::Const { .. } => true,
        NodeKind::FullAdder => membership[i].is_some() && live[i],
        NodeKind::Lut { .. } => {
            let mut ins = node.inputs.clone();
            ins.sort();
            ins.dedup();
            live[i]
                && ins.len() == node.inputs.len()
                && (1..=k).contains(&ins.len())
                && ins.iter().all(|s| netlist.const_value(*s).is_none())
        }
        _ => false,
    })
}

/// LUT depth from primary inputs and chain outputs, which count as level 0.
pub fn lut_levels(netlist: &Netlist) -> Result<BTreeMap<NodeId, u32>> {
    let mut level = vec![0u32; netlist.signal_count()];
    let mut out = BTreeMap::new();
    for id in netlist.topo_order()? {
        let node = netlist.node(id);
        match node.kind {
            NodeKind::Lut { .. } | NodeKind::Gate { .. } => {
                let l = 1 + node.inputs.iter().map(|s| level[s.index()]).max().unwrap_or(0);
                level[node.outputs[0].index()] = l;
                if matches!(node.kind, NodeKind::Lut { .. }) {
                    out.insert(id, l);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LutUsage {
    /// Distinct-input count to number of LUTs.
    pub histogram: BTreeMap<usize, usize>,
    pub six_lut_fraction: f64,
}

impl LutUsage {
    /// Share of LUTs per input count; sums to 1 when there is any LUT.
    pub fn fractions(&self) -> BTreeMap<usize, f64> {
        let total: usize = self.histogram.values().sum();
        self.histogram.iter().map(|(k, v)| (*k, *v as f64 / total as f64)).collect()
    }
}

pub fn lut_usage_split(mapped: &MappedNetlist) -> LutUsage {
    let mut histogram = BTreeMap::new();
    for node in mapped.netlist.nodes() {
        if let NodeKind::Lut { .. } = node.kind {
            let mut ins = node.inputs.clone();
            ins.sort();
            ins.dedup();
            *histogram.entry(ins.len()).or_insert(0) += 1;
        }
    }
    let total: usize = histogram.values().sum();
    let six = histogram.get(&6).copied().unwrap_or(0);
    let six_lut_fraction = if total == 0 { 0.0 } else { six as f64 / total as f64 };
    LutUsage { histogram, six_lut_fraction }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{stats, validate, Assignment, Simulator};
    use crate::ppgen::{generate_generic, generate_unrolled};
    use crate::reduce::{reduce, wallace_reduce, Algorithm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_equivalent(a: &Netlist, b: &Netlist) {
        let bits: usize = a.inputs().iter().map(|b| b.width()).sum();
        let vectors: Vec<Assignment> = if bits <= 10 {
            (0..1u128 << bits).map(|v| split(a, v)).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..10_000).map(|_| split(a, rng.gen::<u128>() & ((1 << bits) - 1))).collect()
        };
        let x = Simulator::new(a).unwrap().run_batch(&vectors).unwrap();
        let y = Simulator::new(b).unwrap().run_batch(&vectors).unwrap();
        assert_eq!(x, y);
    }

    fn split(n: &Netlist, mut v: u128) -> Assignment {
        let mut out = Assignment::new();
        for bus in n.inputs() {
            out.insert(bus.name.clone(), v & ((1 << bus.width()) - 1));
            v >>= bus.width();
        }
        out
    }

    fn parity(n: usize) -> Netlist {
        let mut net = Netlist::new("parity");
        let x = net.add_input_bus("x", n);
        let mut layer = x;
        while layer.len() > 1 {
            layer = layer.chunks(2).map(|c| if c.len() == 2 { net.xor(c[0], c[1]) } else { c[0] }).collect();
        }
        net.set_output_bus("y", layer);
        net
    }

    #[test]
    fn single_xor_becomes_one_lut() {
        let mut n = Netlist::new("x");
        let a = n.add_input_bus("a", 2);
        let y = n.xor(a[0], a[1]);
        n.set_output_bus("y", vec![y]);
        let m = map_to_luts(&n, 5).unwrap();
        let luts: Vec<_> = m.netlist.nodes().iter().filter(|n| matches!(n.kind, NodeKind::Lut { .. })).collect();
        assert_eq!(luts.len(), 1);
        assert_eq!(luts[0].kind, NodeKind::Lut { truth: 0b0110 });
    }

    #[test]
    fn full_adder_logic_needs_two_luts() {
        let mut n = Netlist::new("fa");
        let a = n.add_input_bus("a", 3);
        let t = n.xor(a[0], a[1]);
        let s = n.xor(t, a[2]);
        let g = n.and(a[0], a[1]);
        let p = n.and(t, a[2]);
        let c = n.or(g, p);
        n.set_output_bus("y", vec![s, c]);
        let m = map_to_luts(&n, 5).unwrap();
        assert_eq!(stats(&m.netlist).luts, 2);
        assert_equivalent(&n, &m.netlist);
    }

    #[test]
    fn parity_cones() {
        let n = parity(6);
        let six = map_to_luts(&n, 6).unwrap();
        assert_eq!(stats(&six.netlist).luts, 1);
        let four = map_to_luts(&n, 4).unwrap();
        assert!(stats(&four.netlist).luts <= 3);
        assert_eq!(four.depth(), 2);
        assert_equivalent(&n, &six.netlist);
        assert_equivalent(&n, &four.netlist);
    }

    #[test]
    fn constants_fold_away() {
        let mut n = Netlist::new("c");
        let a = n.add_input_bus("a", 2);
        let one = n.constant(true);
        let zero = n.constant(false);
        let x = n.and(a[0], one);
        let y = n.or(a[1], one);
        let z = n.xor(x, zero);
        let dead = n.and(a[0], a[1]);
        let _ = n.not(dead);
        n.set_output_bus("y", vec![z, y]);
        let m = map_to_luts(&n, 4).unwrap();
        assert_eq!(stats(&m.netlist).luts, 0);
        assert_equivalent(&n, &m.netlist);
    }

    #[test]
    fn free_adders_are_lowered_and_chains_kept() {
        let mut n = Netlist::new("add");
        let a = n.add_input_bus("a", 3);
        let b = n.add_input_bus("b", 3);
        let (s, c) = n.full_adder(a[0], a[1], a[2]);
        let (hs, hc) = n.half_adder(b[0], b[1]);
        let z = n.constant(false);
        let ch = n.add_chain(&a, &b, z);
        let mut outs = ch.sums.clone();
        outs.extend([ch.cout, s, c, hs, hc]);
        n.set_output_bus("y", outs);
        let m = map_to_luts(&n, 6).unwrap();
        let st = stats(&m.netlist);
        assert_eq!((st.full_adders, st.half_adders, st.gates, st.chains), (3, 0, 0, 1));
        assert!(validate(&m.netlist).is_empty());
        assert_equivalent(&n, &m.netlist);
    }

    #[test]
    fn wide_lut_rejected_for_small_k() {
        let mut n = Netlist::new("w");
        let a = n.add_input_bus("a", 6);
        let y = n.lut(0x6996_9669_9669_6996, &a);
        n.set_output_bus("y", vec![y]);
        assert!(matches!(map_to_luts(&n, 4), Err(Error::FaninExceedsK { fanin: 6, k: 4, .. })));
        assert!(matches!(map_to_luts(&n, 3), Err(Error::LutSize(3))));
    }

    #[test]
    fn multipliers_map_equivalently() {
        for alg in Algorithm::ALL {
            for k in [4, 5, 6] {
                let m = generate_generic(4, 4).unwrap();
                let r = reduce(&m, alg).unwrap();
                let mapped = map_to_luts(&r.netlist, k).unwrap();
                assert!(validate(&mapped.netlist).is_empty());
                assert!(mapped.netlist.nodes().iter().all(|n| n.inputs.len() <= k || matches!(n.kind, NodeKind::FullAdder)));
                assert_eq!(stats(&mapped.netlist).gates, 0);
                assert_equivalent(&r.netlist, &mapped.netlist);
            }
        }
        let m = generate_unrolled(7, 0b1011011).unwrap();
        let r = reduce(&m, Algorithm::Wallace).unwrap();
        assert_equivalent(&r.netlist, &map_to_luts(&r.netlist, 6).unwrap().netlist);
    }

    #[test]
    fn mapping_is_idempotent() {
        let m = generate_generic(5, 5).unwrap();
        let r = wallace_reduce(&m).unwrap();
        let once = map_to_luts(&r.netlist, 6).unwrap();
        let twice = map_to_luts(&once.netlist, 6).unwrap();
        assert_eq!(once.netlist.to_json().unwrap(), twice.netlist.to_json().unwrap());
        assert_eq!(once.lut_levels, twice.lut_levels);
    }

    #[test]
    fn usage_histogram() {
        let mut n = Netlist::new("two");
        let a = n.add_input_bus("a", 4);
        let x = n.and(a[0], a[1]);
        let y = n.or(a[2], a[3]);
        n.set_output_bus("y", vec![x, y]);
        let u = lut_usage_split(&map_to_luts(&n, 6).unwrap());
        assert_eq!(u.histogram, BTreeMap::from([(2, 2)]));
        assert_eq!(u.six_lut_fraction, 0.0);

        let m = generate_generic(8, 8).unwrap();
        let r = wallace_reduce(&m).unwrap();
        let first = lut_usage_split(&map_to_luts(&r.netlist, 6).unwrap());
        let again = lut_usage_split(&map_to_luts(&r.netlist, 6).unwrap());
        assert_eq!(first, again);
        assert!((first.fractions().values().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
