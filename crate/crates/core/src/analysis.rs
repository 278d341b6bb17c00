//! Area, critical-path delay and area-delay product of a placement.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::arch::{ArchSpec, ArchVariant};
use crate::error::Result;
use crate::lutmap::MappedNetlist;
use crate::netlist::{NodeId, NodeKind, SignalId};
use crate::pack::{ConcurrencyStats, Placement};

/// Occupied ALMs times the per-ALM area of the variant.
pub fn area(placement: &Placement, spec: &ArchSpec) -> f64 {
    placement.alm_count() as f64 * spec.alm_area()
}

pub fn adp(area: f64, critical_path: f64) -> f64 {
    area * critical_path
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathStep {
    /// Signal reached by this step.
    pub signal: SignalId,
    pub component: String,
    pub delay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPath {
    pub delay: f64,
    pub steps: Vec<PathStep>,
}

#[derive(Clone, Copy)]
struct SlotRef {
    alm: usize,
    concurrent: bool,
}

#[derive(Clone, Debug, Default)]
struct Arrival {
    time: f64,
    from: Option<SignalId>,
    parts: Vec<(&'static str, f64)>,
}

/// Longest primary-input to primary-output path through the placed design.
pub fn critical_path(placement: &Placement, mapped: &MappedNetlist, spec: &ArchSpec) -> Result<CriticalPath> {
    let netlist = &mapped.netlist;
    let d = &spec.delay_table;
    let mut where_: HashMap<NodeId, SlotRef> = HashMap::new();
    let mut fed: HashSet<SignalId> = HashSet::new();
    for (li, lb) in placement.clusters.iter().enumerate() {
        for (si, slot) in lb.slots.iter().enumerate() {
            let r = SlotRef { alm: li * spec.alms_per_lb + si, concurrent: slot.mode.is_concurrent() };
            for n in slot.luts.iter().chain(&slot.feeders).chain(&slot.members) {
                where_.insert(*n, r);
            }
            fed.extend(slot.feeders.iter().map(|f| netlist.node(*f).outputs[0]));
        }
    }
    let out_delay = d.lut_out_to_alm_out
        + if spec.variant == ArchVariant::Dd6 { d.dd6_output_mux_penalty } else { 0.0 };
    let membership = netlist.chain_membership();
    let mut arr: Vec<Arrival> = vec![Arrival::default(); netlist.signal_count()];
    let best = |arr: &[Arrival], cands: Vec<(SignalId, Vec<(&'static str, f64)>)>| -> Arrival {
        let mut out = Arrival::default();
        let mut first = true;
        for (s, parts) in cands {
            let t = arr[s.index()].time + parts.iter().map(|p| p.1).sum::<f64>();
            if first || t > out.time {
                out = Arrival { time: t, from: Some(s), parts };
                first = false;
            }
        }
        out
    };
    for id in netlist.topo_order()? {
        let node = netlist.node(id);
        match node.kind {
            NodeKind::Lut { .. } => {
                // A feeder's LUT delay is part of the ALM-in to adder path.
                let parts = if fed.contains(&node.outputs[0]) {
                    vec![("lb-in-to-alm-in", d.lb_in_to_alm_in)]
                } else {
                    vec![("lb-in-to-alm-in", d.lb_in_to_alm_in), ("lut", d.lut_delay_per_level), ("alm-out", out_delay)]
                };
                let cands = node.inputs.iter().map(|s| (*s, parts.clone())).collect();
                arr[node.outputs[0].index()] = best(&arr, cands);
            }
            NodeKind::FullAdder => {
                let Some((c, pos)) = membership[id.index()] else { continue };
                let here = where_.get(&id).copied();
                let concurrent = here.is_some_and(|h| h.concurrent);
                let entry: Vec<(&'static str, f64)> = if concurrent {
                    vec![("lb-in-to-z", d.lb_in_to_z), ("z-to-adder", d.z_to_adder)]
                } else {
                    vec![("lb-in-to-alm-in", d.lb_in_to_alm_in), ("alm-in-to-adder", spec.general_to_adder())]
                };
                let mut cands: Vec<(SignalId, Vec<(&'static str, f64)>)> = node.inputs[..2]
                    .iter()
                    .filter(|s| netlist.const_value(**s).is_none())
                    .map(|s| {
                        if fed.contains(s) {
                            (*s, vec![("alm-in-to-adder", spec.general_to_adder())])
                        } else {
                            (*s, entry.clone())
                        }
                    })
                    .collect();
                let cin = node.inputs[2];
                if pos > 0 {
                    let prev = netlist.chain(c).members[pos - 1];
                    let hop = match (where_.get(&prev), here) {
                        (Some(a), Some(b)) if a.alm == b.alm => 0.0,
                        _ => d.carry_per_alm,
                    };
                    cands.push((cin, vec![("carry", hop)]));
                } else if netlist.const_value(cin).is_none() {
                    cands.push((cin, entry.clone()));
                }
                // Adder core: the sum and carry are both ready here.
                let core = best(&arr, cands);
                let (sum, cout) = (node.outputs[0], node.outputs[1]);
                let mut s = core.clone();
                s.time += out_delay;
                s.parts.push(("alm-out", out_delay));
                arr[sum.index()] = s;
                arr[cout.index()] = core;
                // A carry-out leaving the chain exits through the next bit position.
                let last = pos + 1 == netlist.chain(c).len();
                if last {
                    let next_alm = (pos + 1) % 2 == 0;
                    let hop = if next_alm { d.carry_per_alm } else { 0.0 };
                    let a = &mut arr[cout.index()];
                    a.time += hop + out_delay;
                    a.parts.push(("carry", hop));
                    a.parts.push(("alm-out", out_delay));
                }
            }
            NodeKind::Gate { .. } | NodeKind::HalfAdder => {
                return Err(crate::error::Error::UnmappedLogic(id));
            }
            _ => {}
        }
    }
    let po = netlist.outputs().iter().flat_map(|b| b.signals.iter().copied());
    let Some(end) = po.max_by(|a, b| arr[a.index()].time.total_cmp(&arr[b.index()].time).then(b.cmp(a))) else {
        return Ok(CriticalPath { delay: 0.0, steps: Vec::new() });
    };
    let mut steps = Vec::new();
    let mut cur = Some(end);
    while let Some(s) = cur {
        let a = &arr[s.index()];
        for (name, delay) in a.parts.iter().rev() {
            steps.push(PathStep { signal: s, component: (*name).to_string(), delay: *delay });
        }
        cur = a.from;
    }
    steps.reverse();
    Ok(CriticalPath { delay: arr[end.index()].time, steps })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Report {
    pub arch: ArchSpec,
    pub alm_count: usize,
    pub lb_count: usize,
    pub total_area: f64,
    pub critical_path: f64,
    pub adp: f64,
    pub concurrency: ConcurrencyStats,
    pub path: Vec<PathStep>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: &'static str = "arch,alms,lbs,area-mwta,critical-path-ps,adp,concurrent-luts";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.3},{:.3},{:.3},{}",
            self.arch.variant,
            self.alm_count,
            self.lb_count,
            self.total_area,
            self.critical_path,
            self.adp,
            self.concurrency.concurrent_luts
        )
    }
}

pub fn analyze(placement: &Placement, mapped: &MappedNetlist, spec: &ArchSpec) -> Result<Report> {
    let total_area = area(placement, spec);
    let cp = critical_path(placement, mapped, spec)?;
    Ok(Report {
        arch: spec.clone(),
        alm_count: placement.alm_count(),
        lb_count: placement.lb_count(),
        total_area,
        critical_path: cp.delay,
        adp: adp(total_area, cp.delay),
        concurrency: placement.concurrency,
        path: cp.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lutmap::map_to_luts;
    use crate::netlist::Netlist;
    use crate::pack::{pack, PackOptions};
    use crate::ppgen::generate_generic;
    use crate::reduce::{reduce, Algorithm};

    fn one_adder(with_lut: bool) -> MappedNetlist {
        let mut n = Netlist::new("one");
        let x = n.add_input_bus("x", 2);
        let z = n.constant(false);
        let c = n.add_chain(&[x[0]], &[x[1]], z);
        let mut outs = c.sums.clone();
        if with_lut {
            let y = n.add_input_bus("y", 5);
            outs.push(n.lut(0xDEAD_BEEF, &y));
        }
        n.set_output_bus("s", outs);
        map_to_luts(&n, 6).unwrap()
    }

    #[test]
    fn single_adder_entry_delays() {
        let m = one_adder(false);
        let base = ArchSpec::defaults(ArchVariant::Baseline);
        let p = pack(&m, &base, &PackOptions::default()).unwrap();
        let cp = critical_path(&p, &m, &base).unwrap();
        assert!((cp.delay - 206.01).abs() < 1e-9);

        let m = one_adder(true);
        let dd5 = ArchSpec::defaults(ArchVariant::Dd5);
        let p = pack(&m, &dd5, &PackOptions::default()).unwrap();
        assert_eq!(p.concurrency.concurrent_alms, 1);
        let path = critical_path(&p, &m, &dd5).unwrap();
        let sum = m.netlist.output_bus("s").unwrap().signals[0];
        let adder_steps: f64 = path.steps.iter().filter(|s| s.signal == sum).map(|s| s.delay).sum();
        // The LUT path dominates; the adder path is the Z entry.
        assert!((path.delay - (72.61 + 150.0)).abs() < 1e-9);
        assert!(adder_steps == 0.0 || (adder_steps - 145.82).abs() < 1e-9);
    }

    #[test]
    fn z_fed_adder_alone() {
        let m = one_adder(true);
        let dd5 = ArchSpec::defaults(ArchVariant::Dd5);
        let mut spec = dd5.clone();
        spec.delay_table.lut_delay_per_level = 0.0;
        let p = pack(&m, &dd5, &PackOptions::default()).unwrap();
        let cp = critical_path(&p, &m, &spec).unwrap();
        assert!((cp.delay - 145.82).abs() < 1e-9);
        assert_eq!(cp.steps.iter().map(|s| s.component.as_str()).collect::<Vec<_>>(), ["lb-in-to-z", "z-to-adder", "alm-out"]);
    }

    #[test]
    fn area_and_adp() {
        let m = one_adder(false);
        for (v, a) in [(ArchVariant::Baseline, 2167.3), (ArchVariant::Dd5, 2167.3 * 1.0372)] {
            let spec = ArchSpec::defaults(v);
            let p = pack(&m, &spec, &PackOptions::default()).unwrap();
            assert!((area(&p, &spec) - a).abs() < 1e-9);
        }
        assert_eq!(adp(0.0, 123.0), 0.0);
        assert!((adp(2167.3, 206.01) - 446_485.47).abs() < 0.01);
    }

    #[test]
    fn empty_design_has_zero_delay() {
        let n = Netlist::new("empty");
        let m = map_to_luts(&n, 6).unwrap();
        let spec = ArchSpec::defaults(ArchVariant::Baseline);
        let p = pack(&m, &spec, &PackOptions::default()).unwrap();
        let r = analyze(&p, &m, &spec).unwrap();
        assert_eq!((r.critical_path, r.total_area, r.adp), (0.0, 0.0, 0.0));
    }

    #[test]
    fn path_components_sum_to_total() {
        for alg in Algorithm::ALL {
            let r = reduce(&generate_generic(6, 6).unwrap(), alg).unwrap();
            let m = map_to_luts(&r.netlist, 6).unwrap();
            for v in ArchVariant::ALL {
                let spec = ArchSpec::defaults(v);
                let p = pack(&m, &spec, &PackOptions::default()).unwrap();
                let cp = critical_path(&p, &m, &spec).unwrap();
                let sum: f64 = cp.steps.iter().map(|s| s.delay).sum();
                assert!((sum - cp.delay).abs() < 1e-6, "{alg} {v}");
                assert!(cp.delay > 0.0);
            }
        }
    }

    #[test]
    fn extra_lut_level_never_shortens_path() {
        let mut n = Netlist::new("lv");
        let x = n.add_input_bus("x", 4);
        let a = n.and(x[0], x[1]);
        let b = n.xor(a, x[2]);
        n.set_output_bus("y", vec![b]);
        let spec = ArchSpec::defaults(ArchVariant::Baseline);
        let m1 = map_to_luts(&n, 4).unwrap();
        let d1 = critical_path(&pack(&m1, &spec, &PackOptions::default()).unwrap(), &m1, &spec).unwrap().delay;
        let mut m = Netlist::new("lv2");
        let x = m.add_input_bus("x", 4);
        let a = m.lut(0x8, &[x[0], x[1]]);
        let b = m.lut(0x6, &[a, x[2]]);
        let c = m.lut(0x1, &[b]);
        m.set_output_bus("y", vec![c]);
        let m2 = map_to_luts(&m, 4).unwrap();
        let d2 = critical_path(&pack(&m2, &spec, &PackOptions::default()).unwrap(), &m2, &spec).unwrap().delay;
        assert!(d2 >= d1);
    }
}
