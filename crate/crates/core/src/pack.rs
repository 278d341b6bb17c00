//! Clustering of a mapped netlist into ALMs and logic blocks.
//!
//! Chains are laid first, two bits per ALM, into consecutive slots. On the
//! Double-Duty variants LUTs are then absorbed into arithmetic ALMs, with the
//! adder operands moving to the Z inputs. Remaining LUTs are clustered by
//! shared-signal affinity.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arch::{mode_legal, AlmContents, AlmMode, ArchSpec, ModeViolation};
use crate::error::{Error, Result};
use crate::lutmap::MappedNetlist;
use crate::netlist::{ChainId, Netlist, NodeId, NodeKind, SignalId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackOptions {
    /// Allow packing logic with no shared signals into the same block.
    pub unrelated_clustering: bool,
    /// Maximum number of logic blocks; elements that do not fit are
    /// reported as unplaced.
    pub lb_budget: Option<usize>,
    /// Zero keeps netlist order; other values shuffle the LUT order.
    pub seed: u64,
    /// LUTs a concurrent 5-LUT ALM may hold (1 or 2).
    pub max_concurrent_luts: usize,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions { unrelated_clustering: true, lb_budget: None, seed: 0, max_concurrent_luts: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct AlmSlot {
    pub mode: AlmMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainId>,
    /// Chain position of the first adder bit.
    pub first_bit: usize,
    /// Adder bits in use, including a trailing carry-out position.
    pub adder_bits: usize,
    pub members: Vec<NodeId>,
    pub luts: Vec<NodeId>,
    /// LUTs that compute this slot's adder operands and drive nothing else.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feeders: Vec<NodeId>,
}

impl AlmSlot {
    fn is_concurrent(&self) -> bool {
        self.adder_bits > 0 && !self.luts.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LogicBlockCluster {
    pub slots: Vec<AlmSlot>,
    pub external_inputs: Vec<SignalId>,
    pub z_routed: Vec<SignalId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Element {
    Lut { node: NodeId },
    ChainSlice { chain: ChainId, first_bit: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConcurrencyStats {
    pub concurrent_alms: usize,
    pub concurrent_luts: usize,
    pub arith_alms: usize,
    pub lut_only_alms: usize,
    pub six_lut_alms: usize,
}

impl ConcurrencyStats {
    pub fn occupied_alms(&self) -> usize {
        self.concurrent_alms + self.arith_alms + self.lut_only_alms
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Placement {
    pub variant: crate::arch::ArchVariant,
    pub clusters: Vec<LogicBlockCluster>,
    pub concurrency: ConcurrencyStats,
    pub unplaced: Vec<Element>,
}

impl Placement {
    pub fn alm_count(&self) -> usize {
        self.clusters.iter().map(|c| c.slots.len()).sum()
    }

    pub fn lb_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_complete(&self) -> bool {
        self.unplaced.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn concurrency_stats(placement: &Placement) -> ConcurrencyStats {
    let mut s = ConcurrencyStats::default();
    for slot in placement.clusters.iter().flat_map(|c| &c.slots) {
        if slot.is_concurrent() {
            s.concurrent_alms += 1;
            s.concurrent_luts += slot.luts.len();
        } else if slot.adder_bits > 0 {
            s.arith_alms += 1;
        } else if !slot.luts.is_empty() {
            s.lut_only_alms += 1;
        }
        if matches!(slot.mode, AlmMode::Lut6 | AlmMode::ArithConcurrent6) {
            s.six_lut_alms += 1;
        }
    }
    s
}

/// Signal-level view of a mapped netlist used by the packer and checker.
struct Info<'a> {
    netlist: &'a Netlist,
    /// LUT inputs (distinct, non-constant) by node.
    lut_inputs: HashMap<NodeId, Vec<SignalId>>,
    /// Chains whose final carry-out feeds something other than the chain.
    cout_used: Vec<bool>,
    fanouts: Vec<Vec<(NodeId, usize)>>,
    po: HashSet<SignalId>,
}

impl<'a> Info<'a> {
    fn new(netlist: &'a Netlist) -> Result<Self> {
        let membership = netlist.chain_membership();
        let mut lut_inputs = HashMap::new();
        for (i, node) in netlist.nodes().iter().enumerate() {
            let id = NodeId(i as u32);
            match node.kind {
                NodeKind::Lut { .. } => {
                    let mut ins: Vec<SignalId> =
                        node.inputs.iter().copied().filter(|s| netlist.const_value(*s).is_none()).collect();
                    ins.sort();
                    ins.dedup();
                    lut_inputs.insert(id, ins);
                }
                NodeKind::FullAdder if membership[i].is_some() => {}
                NodeKind::PrimaryInput { .. } | NodeKind::Const { .. } => {}
                _ => return Err(Error::UnmappedLogic(id)),
            }
        }
        let fanouts = netlist.fanouts();
        let po: HashSet<SignalId> = netlist.outputs().iter().flat_map(|b| b.signals.iter().copied()).collect();
        let cout_used = netlist
            .chains()
            .iter()
            .map(|c| {
                let last = netlist.node(*c.members.last().expect("non-empty chain"));
                let cout = last.outputs[1];
                po.contains(&cout) || !fanouts[cout.index()].is_empty()
            })
            .collect();
        Ok(Info { netlist, lut_inputs, cout_used, fanouts, po })
    }

    fn lut_output(&self, lut: NodeId) -> SignalId {
        self.netlist.node(lut).outputs[0]
    }

    fn chain_positions(&self, c: ChainId) -> usize {
        self.netlist.chain(c).len() + self.cout_used[c.index()] as usize
    }

    fn is_const(&self, s: SignalId) -> bool {
        self.netlist.const_value(s).is_some()
    }

    /// Whether `lut` may preprocess an operand of `slot`: narrow enough, and
    /// its output is read only by the slot's adder operand ports.
    fn can_feed(&self, slot: &AlmSlot, lut: NodeId) -> bool {
        let Some(ins) = self.lut_inputs.get(&lut) else { return false };
        let out = self.lut_output(lut);
        ins.len() <= crate::arch::FEEDER_WIDTH
            && !self.po.contains(&out)
            && !self.fanouts[out.index()].is_empty()
            && self.fanouts[out.index()].iter().all(|(n, port)| *port < 2 && slot.members.contains(n))
    }

    /// Distinct non-constant adder operands of a slot (plus the chain's
    /// carry-in on its first slot), excluding those computed by feeders.
    fn operands(&self, slot: &AlmSlot) -> Vec<SignalId> {
        let mut ops: Vec<SignalId> = slot
            .members
            .iter()
            .flat_map(|m| self.netlist.node(*m).inputs[..2].iter().copied())
            .collect();
        if slot.first_bit == 0 {
            if let Some(c) = slot.chain {
                ops.push(self.netlist.chain(c).cin0);
            }
        }
        let fed: Vec<SignalId> = slot.feeders.iter().map(|f| self.lut_output(*f)).collect();
        ops.retain(|s| !self.is_const(*s) && !fed.contains(s));
        ops.sort();
        ops.dedup();
        ops
    }

    fn produced(&self, slot: &AlmSlot) -> Vec<SignalId> {
        let mut out: Vec<SignalId> = slot.luts.iter().map(|l| self.lut_output(*l)).collect();
        for m in &slot.members {
            out.extend(&self.netlist.node(*m).outputs);
        }
        if slot.members.is_empty() && slot.adder_bits > 0 {
            // A slice holding only the carry-out position.
            if let Some(c) = slot.chain {
                let last = *self.netlist.chain(c).members.last().expect("non-empty chain");
                out.push(self.netlist.node(last).outputs[1]);
            }
        }
        out
    }

    fn contents(&self, slot: &AlmSlot) -> AlmContents {
        AlmContents {
            luts: slot.luts.iter().map(|l| self.lut_inputs[l].clone()).collect(),
            adder_bits: slot.adder_bits,
            adder_operands: self.operands(slot),
            feeders: slot.feeders.iter().map(|f| self.lut_inputs[f].clone()).collect(),
        }
    }

    /// `(signal, general, z, produced)` use counts contributed by a slot.
    fn uses(&self, slot: &AlmSlot) -> Vec<(SignalId, i32, i32, i32)> {
        let mut u = Vec::new();
        let z = slot.mode.is_concurrent();
        for s in self.operands(slot) {
            u.push(if z { (s, 0, 1, 0) } else { (s, 1, 0, 0) });
        }
        for l in slot.luts.iter().chain(&slot.feeders) {
            for s in &self.lut_inputs[l] {
                u.push((*s, 1, 0, 0));
            }
        }
        for s in self.produced(slot) {
            u.push((s, 0, 0, 1));
        }
        u
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Use {
    general: i32,
    z: i32,
    produced: i32,
}

impl Use {
    fn external(&self) -> bool {
        self.z > 0 || (self.general > 0 && self.produced == 0)
    }
}

#[derive(Clone, Debug, Default)]
struct Lb {
    slots: Vec<AlmSlot>,
    sig: HashMap<SignalId, Use>,
    ext: usize,
    z: usize,
}

impl Lb {
    fn apply(&mut self, changes: &[(SignalId, i32, i32, i32)], sign: i32) {
        for &(s, g, z, p) in changes {
            let u = self.sig.entry(s).or_default();
            let (was_ext, was_z) = (u.external(), u.z > 0);
            u.general += sign * g;
            u.z += sign * z;
            u.produced += sign * p;
            let (is_ext, is_z) = (u.external(), u.z > 0);
            self.ext = self.ext + is_ext as usize - was_ext as usize;
            self.z = self.z + is_z as usize - was_z as usize;
        }
    }

    fn fits(&self, spec: &ArchSpec) -> bool {
        self.ext <= spec.lb_input_budget() && self.z <= spec.addmux_xbar_pins
    }

    /// Replaces slot `idx` (or appends when `idx == slots.len()`) if the
    /// block's pin budgets still hold.
    fn try_set(&mut self, info: &Info, spec: &ArchSpec, idx: usize, slot: AlmSlot) -> bool {
        let old = self.slots.get(idx).map(|s| info.uses(s));
        let new = info.uses(&slot);
        if let Some(old) = &old {
            self.apply(old, -1);
        }
        self.apply(&new, 1);
        if self.fits(spec) {
            if idx == self.slots.len() {
                self.slots.push(slot);
            } else {
                self.slots[idx] = slot;
            }
            true
        } else {
            self.apply(&new, -1);
            if let Some(old) = &old {
                self.apply(old, 1);
            }
            false
        }
    }

    fn affinity(&self, signals: &[SignalId]) -> usize {
        signals.iter().filter(|s| self.sig.contains_key(s)).count()
    }
}

/// Unrelated LUTs tried and rejected before a block is considered full.
const MAX_UNRELATED_MISSES: usize = 32;

struct Packer<'a> {
    info: Info<'a>,
    spec: &'a ArchSpec,
    opts: &'a PackOptions,
    lbs: Vec<Lb>,
    unplaced: Vec<Element>,
}

impl Packer<'_> {
    fn new_lb(&mut self) -> Option<usize> {
        if self.opts.lb_budget.is_some_and(|b| self.lbs.len() >= b) {
            return None;
        }
        self.lbs.push(Lb::default());
        Some(self.lbs.len() - 1)
    }

    fn lut_signals(&self, lut: NodeId) -> Vec<SignalId> {
        let mut s = self.info.lut_inputs[&lut].clone();
        s.push(self.info.lut_output(lut));
        s
    }

    /// Pulls operand-preprocessing LUTs into an arithmetic slot while it
    /// stays legal.
    fn with_feeders(&self, mut slot: AlmSlot, taken: &mut HashSet<NodeId>) -> AlmSlot {
        let mut cands: Vec<NodeId> = Vec::new();
        for m in &slot.members {
            for s in &self.info.netlist.node(*m).inputs[..2] {
                let (d, _) = self.info.netlist.driver(*s);
                if self.info.lut_inputs.contains_key(&d) && !cands.contains(&d) && !taken.contains(&d) {
                    cands.push(d);
                }
            }
        }
        for lut in cands {
            if !self.info.can_feed(&slot, lut) {
                continue;
            }
            slot.feeders.push(lut);
            if mode_legal(self.spec, AlmMode::Arith, &self.info.contents(&slot)).legal {
                taken.insert(lut);
            } else {
                slot.feeders.pop();
            }
        }
        slot
    }

    fn place_chains(&mut self) -> HashSet<NodeId> {
        let mut taken = HashSet::new();
        let chains = self.info.netlist.chains().len();
        let mut open: Option<usize> = None;
        for c in 0..chains {
            let c = ChainId(c as u32);
            let members = &self.info.netlist.chain(c).members;
            let positions = self.info.chain_positions(c);
            let mut failed = false;
            for first in (0..positions).step_by(2) {
                let bits = (positions - first).min(2);
                let slot = AlmSlot {
                    mode: AlmMode::Arith,
                    chain: Some(c),
                    first_bit: first,
                    adder_bits: bits,
                    members: members[first.min(members.len())..(first + bits).min(members.len())].to_vec(),
                    luts: Vec::new(),
                    feeders: Vec::new(),
                };
                let slot = self.with_feeders(slot, &mut taken);
                if failed {
                    self.unplaced.push(Element::ChainSlice { chain: c, first_bit: first });
                    continue;
                }
                let lb = match open.filter(|&l| self.lbs[l].slots.len() < self.spec.alms_per_lb) {
                    Some(l) => Some(l),
                    None => self.new_lb(),
                };
                let placed = lb.is_some_and(|l| {
                    let idx = self.lbs[l].slots.len();
                    let spec = self.spec;
                    self.lbs[l].try_set(&self.info, spec, idx, slot)
                });
                if placed {
                    open = lb;
                } else {
                    // Operands alone exceed a block's pins, or no block is left.
                    failed = true;
                    self.unplaced.push(Element::ChainSlice { chain: c, first_bit: first });
                }
            }
        }
        taken
    }

    /// Candidate concurrent form of `slot` with `lut` added.
    fn absorbed(&self, slot: &AlmSlot, lut: NodeId) -> Option<AlmSlot> {
        if slot.adder_bits == 0 || !slot.feeders.is_empty() {
            return None;
        }
        let mut next = slot.clone();
        next.luts.push(lut);
        let contents = self.info.contents(&next);
        let wide = contents.luts.iter().any(|l| l.len() > 5);
        let modes: &[AlmMode] = if wide {
            &[AlmMode::ArithConcurrent6]
        } else {
            &[AlmMode::ArithConcurrent5, AlmMode::ArithConcurrent6]
        };
        for &mode in modes {
            if mode == AlmMode::ArithConcurrent5 && next.luts.len() > self.opts.max_concurrent_luts {
                continue;
            }
            if mode_legal(self.spec, mode, &contents).legal {
                next.mode = mode;
                return Some(next);
            }
        }
        None
    }

    fn try_absorb_into(&mut self, lb: usize, lut: NodeId) -> bool {
        for idx in 0..self.lbs[lb].slots.len() {
            if let Some(next) = self.absorbed(&self.lbs[lb].slots[idx], lut) {
                let spec = self.spec;
                if self.lbs[lb].try_set(&self.info, spec, idx, next) {
                    return true;
                }
            }
        }
        false
    }

    fn absorb(&mut self, order: &[NodeId]) -> Vec<NodeId> {
        let mut rest = Vec::new();
        let has_room = |lb: &Lb, cap: usize| {
            lb.slots.iter().any(|s| s.adder_bits > 0 && s.feeders.is_empty() && s.luts.len() < cap)
        };
        for &lut in order {
            let sigs = self.lut_signals(lut);
            let mut ranked: Vec<(usize, usize)> = self
                .lbs
                .iter()
                .enumerate()
                .filter(|(_, lb)| has_room(lb, 2))
                .map(|(i, lb)| (lb.affinity(&sigs), i))
                .filter(|(a, _)| *a > 0 || self.opts.unrelated_clustering)
                .collect();
            ranked.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
            let placed = ranked.into_iter().any(|(_, lb)| self.try_absorb_into(lb, lut));
            if !placed {
                rest.push(lut);
            }
        }
        rest
    }

    /// Adds `lut` to block `lb` in a LUT-only slot: pairing with a lone
    /// 5-LUT when legal, otherwise in a fresh slot.
    fn add_lut(&mut self, lb: usize, lut: NodeId) -> bool {
        let spec = self.spec;
        let width = self.info.lut_inputs[&lut].len();
        if width <= 5 {
            for idx in 0..self.lbs[lb].slots.len() {
                let slot = &self.lbs[lb].slots[idx];
                if slot.adder_bits > 0 || slot.luts.len() != 1 || slot.mode != AlmMode::TwoLut5 {
                    continue;
                }
                let mut next = slot.clone();
                next.luts.push(lut);
                if mode_legal(spec, AlmMode::TwoLut5, &self.info.contents(&next)).legal
                    && self.lbs[lb].try_set(&self.info, spec, idx, next)
                {
                    return true;
                }
            }
        }
        if self.lbs[lb].slots.len() >= spec.alms_per_lb {
            return false;
        }
        let mode = if width <= 5 { AlmMode::TwoLut5 } else { AlmMode::Lut6 };
        let slot = AlmSlot {
            mode,
            chain: None,
            first_bit: 0,
            adder_bits: 0,
            members: Vec::new(),
            luts: vec![lut],
            feeders: Vec::new(),
        };
        let idx = self.lbs[lb].slots.len();
        self.lbs[lb].try_set(&self.info, spec, idx, slot)
    }

    fn has_lut_room(&self, lb: usize) -> bool {
        let b = &self.lbs[lb];
        b.slots.len() < self.spec.alms_per_lb
            || b.slots.iter().any(|s| s.mode == AlmMode::TwoLut5 && s.luts.len() == 1)
    }

    /// Grows block `lb` with the most attached LUTs from `pool`.
    fn grow(&mut self, lb: usize, pool: &mut Vec<NodeId>, users: &HashMap<SignalId, Vec<NodeId>>) {
        let pos: HashMap<NodeId, usize> = pool.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut taken: HashSet<NodeId> = HashSet::new();
        let mut rejected: HashSet<NodeId> = HashSet::new();
        let mut misses = 0;
        while self.has_lut_room(lb) && misses < MAX_UNRELATED_MISSES {
            let mut score: HashMap<NodeId, usize> = HashMap::new();
            for s in self.lbs[lb].sig.keys() {
                for l in users.get(s).into_iter().flatten() {
                    if pos.contains_key(l) && !taken.contains(l) && !rejected.contains(l) {
                        *score.entry(*l).or_default() += 1;
                    }
                }
            }
            let mut cands: Vec<(usize, usize, NodeId)> = score.into_iter().map(|(l, a)| (a, pos[&l], l)).collect();
            cands.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
            let mut placed = false;
            for (_, _, l) in cands {
                if self.add_lut(lb, l) {
                    taken.insert(l);
                    placed = true;
                    break;
                }
                rejected.insert(l);
            }
            if !placed && self.opts.unrelated_clustering {
                let next = pool.iter().copied().find(|l| !taken.contains(l) && !rejected.contains(l));
                if let Some(l) = next {
                    if self.add_lut(lb, l) {
                        taken.insert(l);
                        placed = true;
                    } else {
                        rejected.insert(l);
                        misses += 1;
                        placed = true;
                    }
                }
            }
            if !placed {
                break;
            }
        }
        pool.retain(|l| !taken.contains(l));
    }

    fn cluster_rest(&mut self, mut pool: Vec<NodeId>) {
        let mut users: HashMap<SignalId, Vec<NodeId>> = HashMap::new();
        for &l in &pool {
            for s in self.lut_signals(l) {
                users.entry(s).or_default().push(l);
            }
        }
        for lb in 0..self.lbs.len() {
            if pool.is_empty() {
                break;
            }
            if self.has_lut_room(lb) {
                self.grow(lb, &mut pool, &users);
            }
        }
        while let Some(&seed) = pool.first() {
            let Some(lb) = self.new_lb() else { break };
            if !self.add_lut(lb, seed) {
                // A LUT whose inputs alone exceed the pin budget.
                self.lbs.pop();
                self.unplaced.push(Element::Lut { node: seed });
                pool.remove(0);
                continue;
            }
            pool.remove(0);
            self.grow(lb, &mut pool, &users);
        }
        self.unplaced.extend(pool.into_iter().map(|node| Element::Lut { node }));
    }

    fn finish(self) -> Placement {
        let clusters: Vec<LogicBlockCluster> = self
            .lbs
            .into_iter()
            .map(|lb| {
                let mut ext: Vec<SignalId> = lb.sig.iter().filter(|(_, u)| u.external()).map(|(s, _)| *s).collect();
                let mut z: Vec<SignalId> = lb.sig.iter().filter(|(_, u)| u.z > 0).map(|(s, _)| *s).collect();
                ext.sort();
                z.sort();
                LogicBlockCluster { slots: lb.slots, external_inputs: ext, z_routed: z }
            })
            .collect();
        let mut p = Placement { variant: self.spec.variant, clusters, concurrency: ConcurrencyStats::default(), unplaced: self.unplaced };
        p.concurrency = concurrency_stats(&p);
        p
    }
}

/// Packs `mapped` onto the architecture `spec`.
pub fn pack(mapped: &MappedNetlist, spec: &ArchSpec, opts: &PackOptions) -> Result<Placement> {
    let info = Info::new(&mapped.netlist)?;
    let mut luts: Vec<NodeId> = info.lut_inputs.keys().copied().collect();
    luts.sort();
    if opts.seed != 0 {
        luts.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    }
    let mut packer = Packer { info, spec, opts, lbs: Vec::new(), unplaced: Vec::new() };
    let fed = packer.place_chains();
    luts.retain(|l| !fed.contains(l));
    let rest = if spec.variant.is_double_duty() { packer.absorb(&luts) } else { luts };
    packer.cluster_rest(rest);
    Ok(packer.finish())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PackDiagnostic {
    UnmappedLogic { node: NodeId },
    Missing { node: NodeId },
    Duplicate { node: NodeId },
    UnknownNode { node: NodeId },
    Mode { lb: usize, slot: usize, violation: ModeViolation },
    SlotChain { lb: usize, slot: usize },
    ChainContiguity { chain: ChainId },
    TooManySlots { lb: usize, slots: usize },
    PinBudget { lb: usize, needed: usize, available: usize },
    ZBudget { lb: usize, needed: usize, available: usize },
    Concurrent { lb: usize, slot: usize },
    Feeder { lb: usize, slot: usize, node: NodeId },
}

/// Re-derives every slot and block constraint of `placement` from the
/// netlist. Returns an empty list iff the placement is legal.
pub fn legality_check(placement: &Placement, netlist: &Netlist, spec: &ArchSpec) -> Vec<PackDiagnostic> {
    let mut diags = Vec::new();
    let info = match Info::new(netlist) {
        Ok(i) => i,
        Err(Error::UnmappedLogic(node)) => return vec![PackDiagnostic::UnmappedLogic { node }],
        Err(_) => unreachable!("Info::new only reports unmapped logic"),
    };
    let membership = netlist.chain_membership();
    let mut seen: HashMap<NodeId, usize> = HashMap::new();
    let mut chain_slots: HashMap<ChainId, Vec<(usize, usize)>> = HashMap::new();
    for (li, lb) in placement.clusters.iter().enumerate() {
        if lb.slots.len() > spec.alms_per_lb {
            diags.push(PackDiagnostic::TooManySlots { lb: li, slots: lb.slots.len() });
        }
        let mut sig: HashMap<SignalId, Use> = HashMap::new();
        for (si, slot) in lb.slots.iter().enumerate() {
            let known = slot.luts.iter().chain(&slot.feeders).all(|l| info.lut_inputs.contains_key(l))
                && slot.members.iter().all(|m| m.index() < netlist.nodes().len());
            if !known {
                for n in slot.luts.iter().chain(&slot.feeders).chain(&slot.members) {
                    diags.push(PackDiagnostic::UnknownNode { node: *n });
                }
                continue;
            }
            for n in slot.luts.iter().chain(&slot.feeders).chain(&slot.members) {
                *seen.entry(*n).or_default() += 1;
            }
            for f in &slot.feeders {
                if !info.can_feed(slot, *f) {
                    diags.push(PackDiagnostic::Feeder { lb: li, slot: si, node: *f });
                }
            }
            for v in mode_legal(spec, slot.mode, &info.contents(slot)).violations {
                diags.push(PackDiagnostic::Mode { lb: li, slot: si, violation: v });
            }
            if slot.is_concurrent() && !slot.mode.is_concurrent() {
                diags.push(PackDiagnostic::Concurrent { lb: li, slot: si });
            }
            if slot.adder_bits > 0 {
                let ok = slot.chain.is_some_and(|c| {
                    let members = &netlist.chain(c).members;
                    let positions = info.chain_positions(c);
                    let expect_bits = (positions.saturating_sub(slot.first_bit)).min(2);
                    let lo = slot.first_bit.min(members.len());
                    let hi = (slot.first_bit + slot.adder_bits).min(members.len());
                    slot.first_bit % 2 == 0
                        && slot.adder_bits == expect_bits
                        && slot.members == members[lo..hi]
                        && slot.members.iter().all(|m| membership[m.index()].map(|x| x.0) == Some(c))
                });
                if !ok {
                    diags.push(PackDiagnostic::SlotChain { lb: li, slot: si });
                }
                if let Some(c) = slot.chain {
                    chain_slots.entry(c).or_default().push((slot.first_bit, li * spec.alms_per_lb + si));
                }
            } else if !slot.members.is_empty() || slot.chain.is_some() {
                diags.push(PackDiagnostic::SlotChain { lb: li, slot: si });
            }
            for (s, g, z, p) in info.uses(slot) {
                let u = sig.entry(s).or_default();
                u.general += g;
                u.z += z;
                u.produced += p;
            }
        }
        let ext = sig.values().filter(|u| u.external()).count();
        let z = sig.values().filter(|u| u.z > 0).count();
        if ext > spec.lb_input_budget() {
            diags.push(PackDiagnostic::PinBudget { lb: li, needed: ext, available: spec.lb_input_budget() });
        }
        if z > spec.addmux_xbar_pins {
            diags.push(PackDiagnostic::ZBudget { lb: li, needed: z, available: spec.addmux_xbar_pins });
        }
    }
    for (c, mut slots) in chain_slots {
        slots.sort();
        let contiguous = slots.windows(2).all(|w| w[1].1 == w[0].1 + 1 && w[1].0 == w[0].0 + 2);
        if !contiguous || slots[0].0 != 0 {
            diags.push(PackDiagnostic::ChainContiguity { chain: c });
        }
    }
    let unplaced: HashSet<NodeId> = placement
        .unplaced
        .iter()
        .flat_map(|e| match e {
            Element::Lut { node } => vec![*node],
            Element::ChainSlice { chain, first_bit } => {
                let m = &netlist.chain(*chain).members;
                m[(*first_bit).min(m.len())..(*first_bit + 2).min(m.len())].to_vec()
            }
        })
        .collect();
    let mut required: Vec<NodeId> = info.lut_inputs.keys().copied().collect();
    required.extend(netlist.chains().iter().flat_map(|c| c.members.iter().copied()));
    required.sort();
    for n in required {
        match seen.get(&n).copied().unwrap_or(0) {
            0 if !unplaced.contains(&n) => diags.push(PackDiagnostic::Missing { node: n }),
            0 | 1 => {}
            _ => diags.push(PackDiagnostic::Duplicate { node: n }),
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchVariant;
    use crate::lutmap::map_to_luts;
    use crate::ppgen::generate_generic;
    use crate::reduce::{reduce, Algorithm};

    fn spec(v: ArchVariant) -> ArchSpec {
        ArchSpec::defaults(v)
    }

    fn chain_circuit(bits: usize, operands: usize) -> Netlist {
        let mut n = Netlist::new("chains");
        let x = n.add_input_bus("x", operands);
        let z = n.constant(false);
        let a: Vec<SignalId> = (0..bits).map(|i| x[i % operands]).collect();
        let b: Vec<SignalId> = (0..bits).map(|i| x[(i + 1) % operands]).collect();
        let c = n.add_chain(&a, &b, z);
        n.set_output_bus("s", c.sums);
        n
    }

    fn mapped(n: &Netlist) -> MappedNetlist {
        map_to_luts(n, 6).unwrap()
    }

    #[test]
    fn adders_fill_two_bits_per_alm() {
        let m = mapped(&chain_circuit(500, 4));
        let p = pack(&m, &spec(ArchVariant::Baseline), &PackOptions::default()).unwrap();
        assert_eq!(p.alm_count(), 250);
        assert_eq!(p.lb_count(), 25);
        assert!(legality_check(&p, &m.netlist, &spec(ArchVariant::Baseline)).is_empty());
    }

    #[test]
    fn used_carry_out_takes_a_position() {
        let mut n = Netlist::new("c");
        let x = n.add_input_bus("x", 4);
        let y = n.add_input_bus("y", 4);
        let z = n.constant(false);
        let c = n.add_chain(&x, &y, z);
        let mut s = c.sums.clone();
        s.push(c.cout);
        n.set_output_bus("s", s);
        let m = mapped(&n);
        let sp = spec(ArchVariant::Baseline);
        let p = pack(&m, &sp, &PackOptions::default()).unwrap();
        assert_eq!(p.alm_count(), 3);
        assert!(legality_check(&p, &m.netlist, &sp).is_empty());
    }

    fn with_luts(bits: usize, operands: usize, luts: usize) -> Netlist {
        let mut n = chain_circuit(bits, operands);
        let pool = n.input_bus("x").unwrap().signals.clone();
        let outs: Vec<SignalId> = (0..luts)
            .map(|i| {
                let ins: Vec<SignalId> = (0..5).map(|k| pool[(i + k) % pool.len()]).collect();
                n.lut(0x1234_5678 ^ i as u64, &ins)
            })
            .collect();
        n.set_output_bus("l", outs);
        n
    }

    #[test]
    fn baseline_never_concurrent_dd5_absorbs() {
        let m = mapped(&with_luts(40, 6, 20));
        let base = pack(&m, &spec(ArchVariant::Baseline), &PackOptions::default()).unwrap();
        assert_eq!(base.concurrency.concurrent_luts, 0);
        assert_eq!(base.concurrency.concurrent_alms, 0);
        let dd5 = pack(&m, &spec(ArchVariant::Dd5), &PackOptions::default()).unwrap();
        assert!(dd5.concurrency.concurrent_luts > 0);
        assert!(dd5.alm_count() <= base.alm_count());
        for (p, v) in [(&base, ArchVariant::Baseline), (&dd5, ArchVariant::Dd5)] {
            assert!(legality_check(p, &m.netlist, &spec(v)).is_empty());
            let c = p.concurrency;
            assert_eq!(c.occupied_alms(), p.alm_count());
        }
    }

    #[test]
    fn single_lut_option_limits_absorption() {
        let m = mapped(&with_luts(40, 6, 40));
        let two = pack(&m, &spec(ArchVariant::Dd5), &PackOptions::default()).unwrap();
        let one = pack(&m, &spec(ArchVariant::Dd5), &PackOptions { max_concurrent_luts: 1, ..Default::default() }).unwrap();
        assert!(one.concurrency.concurrent_luts <= one.concurrency.concurrent_alms);
        assert!(two.concurrency.concurrent_luts >= one.concurrency.concurrent_luts);
    }

    #[test]
    fn lb_budget_reports_unplaced() {
        let m = mapped(&chain_circuit(100, 4));
        let sp = spec(ArchVariant::Baseline);
        let p = pack(&m, &sp, &PackOptions { lb_budget: Some(2), ..Default::default() }).unwrap();
        assert_eq!(p.lb_count(), 2);
        assert!(!p.is_complete());
        assert!(legality_check(&p, &m.netlist, &sp).is_empty());
    }

    #[test]
    fn multipliers_pack_legally_and_deterministically() {
        for alg in Algorithm::ALL {
            let r = reduce(&generate_generic(6, 6).unwrap(), alg).unwrap();
            let m = mapped(&r.netlist);
            for v in ArchVariant::ALL {
                let opts = PackOptions { seed: 3, ..Default::default() };
                let p = pack(&m, &spec(v), &opts).unwrap();
                assert!(p.is_complete());
                assert_eq!(legality_check(&p, &m.netlist, &spec(v)), vec![]);
                assert_eq!(p, pack(&m, &spec(v), &opts).unwrap());
            }
        }
    }

    #[test]
    fn checker_flags_pin_budget() {
        let mut n = Netlist::new("wide");
        let x = n.add_input_bus("x", 55);
        let outs: Vec<SignalId> = x.chunks(5).map(|c| n.lut(0x8000_0000, c)).collect();
        n.set_output_bus("y", outs);
        let m = mapped(&n);
        let luts: Vec<NodeId> = (0..m.netlist.nodes().len() as u32)
            .map(NodeId)
            .filter(|id| matches!(m.netlist.node(*id).kind, NodeKind::Lut { .. }))
            .collect();
        let slots = luts
            .chunks(2)
            .map(|c| AlmSlot { mode: AlmMode::TwoLut5, chain: None, first_bit: 0, adder_bits: 0, members: vec![], luts: c.to_vec(), feeders: vec![] })
            .collect();
        let p = Placement {
            variant: ArchVariant::Baseline,
            clusters: vec![LogicBlockCluster { slots, external_inputs: vec![], z_routed: vec![] }],
            concurrency: ConcurrencyStats::default(),
            unplaced: vec![],
        };
        let d = legality_check(&p, &m.netlist, &spec(ArchVariant::Baseline));
        assert!(d.contains(&PackDiagnostic::PinBudget { lb: 0, needed: 55, available: 54 }));
    }

    #[test]
    fn checker_flags_baseline_concurrency() {
        let m = mapped(&with_luts(2, 4, 1));
        let lut = (0..m.netlist.nodes().len() as u32)
            .map(NodeId)
            .find(|id| matches!(m.netlist.node(*id).kind, NodeKind::Lut { .. }))
            .unwrap();
        let members = m.netlist.chain(ChainId(0)).members.clone();
        let slot = AlmSlot { mode: AlmMode::Arith, chain: Some(ChainId(0)), first_bit: 0, adder_bits: 2, members, luts: vec![lut], feeders: vec![] };
        let p = Placement {
            variant: ArchVariant::Baseline,
            clusters: vec![LogicBlockCluster { slots: vec![slot], external_inputs: vec![], z_routed: vec![] }],
            concurrency: ConcurrencyStats::default(),
            unplaced: vec![],
        };
        let d = legality_check(&p, &m.netlist, &spec(ArchVariant::Baseline));
        assert!(d.iter().any(|x| matches!(x, PackDiagnostic::Mode { .. })));
        assert!(d.iter().any(|x| matches!(x, PackDiagnostic::Concurrent { .. })));
    }

    #[test]
    fn all_lut_design_has_no_concurrency() {
        let mut n = Netlist::new("luts");
        let x = n.add_input_bus("x", 6);
        let y = n.xor(x[0], x[1]);
        n.set_output_bus("y", vec![y]);
        let q = pack(&mapped(&n), &spec(ArchVariant::Dd5), &PackOptions::default()).unwrap();
        assert_eq!(q.concurrency.concurrent_alms, 0);
        assert_eq!(q.concurrency.lut_only_alms, 1);
    }
}
