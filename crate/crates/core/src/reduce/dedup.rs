use std::collections::HashMap;

use crate::netlist::{Netlist, SignalId};

fn resolve(canon: &[SignalId], mut s: SignalId) -> SignalId {
    while canon[s.index()] != s {
        s = canon[s.index()];
    }
    s
}

/// Merges adder chains that read the same operands bit for bit, redirecting
/// every reader of a duplicate to the first instance. Repeats until no more
/// chains collapse, since merging one pair can make downstream chains equal.
pub fn dedup_chains(netlist: &Netlist) -> Netlist {
    let mut canon: Vec<SignalId> = (0..netlist.signal_count() as u32).map(SignalId).collect();
    let mut keep = vec![true; netlist.nodes().len()];
    let mut dropped = vec![false; netlist.chains().len()];
    loop {
        let mut seen: HashMap<Vec<SignalId>, usize> = HashMap::new();
        let mut changed = false;
        for (ci, chain) in netlist.chains().iter().enumerate() {
            if dropped[ci] {
                continue;
            }
            let mut key = vec![resolve(&canon, chain.cin0)];
            for m in &chain.members {
                let node = netlist.node(*m);
                key.push(resolve(&canon, node.inputs[0]));
                key.push(resolve(&canon, node.inputs[1]));
            }
            match seen.get(&key) {
                None => {
                    seen.insert(key, ci);
                }
                Some(&first) => {
                    let orig = &netlist.chains()[first];
                    for (dup, kept) in chain.members.iter().zip(&orig.members) {
                        let (d, k) = (netlist.node(*dup), netlist.node(*kept));
                        for (ds, ks) in d.outputs.iter().zip(&k.outputs) {
                            canon[ds.index()] = *ks;
                        }
                        keep[dup.index()] = false;
                    }
                    dropped[ci] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if !dropped.contains(&true) {
        return netlist.clone();
    }
    let flat: Vec<SignalId> = (0..canon.len()).map(|i| resolve(&canon, SignalId(i as u32))).collect();
    netlist.rebuild(&keep, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::stats;
    use crate::ppgen::generate_unrolled;
    use crate::reduce::test_support::assert_multiplies;
    use crate::reduce::{cascade_reduce, CascadeOptions};

    #[test]
    fn unique_chains_are_untouched() {
        let mut n = Netlist::new("t");
        let a = n.add_input_bus("a", 3);
        let b = n.add_input_bus("b", 3);
        let z = n.constant(false);
        let out = n.add_chain(&a, &b, z);
        n.set_output_bus("s", out.sums);
        let d = dedup_chains(&n);
        assert_eq!(d.to_json().unwrap(), n.to_json().unwrap());
    }

    #[test]
    fn identical_chains_merge() {
        let mut n = Netlist::new("t");
        let a = n.add_input_bus("a", 3);
        let b = n.add_input_bus("b", 3);
        let z = n.constant(false);
        let x = n.add_chain(&a, &b, z);
        let y = n.add_chain(&a, &b, z);
        // A third chain that only becomes a duplicate once x and y merge.
        let u = n.add_chain(&x.sums, &a, z);
        let v = n.add_chain(&y.sums, &a, z);
        n.set_output_bus("u", u.sums);
        n.set_output_bus("v", v.sums);
        let d = dedup_chains(&n);
        assert_eq!(stats(&d).chains, 2);
        assert_eq!(stats(&d).full_adders, 6);
        assert_eq!(d.output_bus("u").unwrap().signals, d.output_bus("v").unwrap().signals);
    }

    #[test]
    fn merging_preserves_function() {
        let m = generate_unrolled(8, 0b0101_0101).unwrap();
        let plain = cascade_reduce(&m, &CascadeOptions { dedup: false, ..Default::default() }).unwrap();
        let merged = dedup_chains(&plain.netlist);
        assert!(stats(&merged).full_adders < stats(&plain.netlist).full_adders);
        assert_multiplies(&merged, &m);
    }
}
