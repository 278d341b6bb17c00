//! BLIF export and a small reader for combinational `.names` models.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use super::{GateOp, Netlist, NodeKind, SignalId};
use crate::error::{Error, Result};

/// Writes a single-model BLIF description. Adders are expanded into
/// `.names` covers; LUTs are written as their on-set minterms.
pub fn export_blif(netlist: &Netlist) -> Result<String> {
    if netlist.inputs().iter().any(|b| b.name.is_empty()) {
        return Err(Error::UnnamedBus("input"));
    }
    if netlist.outputs().iter().any(|b| b.name.is_empty()) {
        return Err(Error::UnnamedBus("output"));
    }
    let order = netlist.topo_order()?;

    let mut names: Vec<String> = (0..netlist.signal_count()).map(|i| format!("n{i}")).collect();
    for bus in netlist.inputs() {
        for (bit, s) in bus.signals.iter().enumerate() {
            names[s.index()] = format!("{}[{bit}]", bus.name);
        }
    }
    // The first output port reading a non-PI signal names that net directly;
    // any further ports reading it get a buffer.
    let mut buffers: Vec<(SignalId, String)> = Vec::new();
    let mut renamed = vec![false; netlist.signal_count()];
    for bus in netlist.outputs() {
        for (bit, s) in bus.signals.iter().enumerate() {
            let port = format!("{}[{bit}]", bus.name);
            let is_pi = matches!(netlist.driver_node(*s).kind, NodeKind::PrimaryInput { .. });
            if !is_pi && !renamed[s.index()] {
                renamed[s.index()] = true;
                names[s.index()] = port;
            } else {
                buffers.push((*s, port));
            }
        }
    }

    let mut out = String::new();
    let model = if netlist.name().is_empty() { "top" } else { netlist.name() };
    writeln!(out, ".model {model}").unwrap();
    let ins: Vec<&str> = netlist.inputs().iter().flat_map(|b| b.signals.iter()).map(|s| names[s.index()].as_str()).collect();
    writeln!(out, ".inputs {}", ins.join(" ")).unwrap();
    let outs: Vec<String> = netlist
        .outputs()
        .iter()
        .flat_map(|b| (0..b.width()).map(move |i| format!("{}[{i}]", b.name)))
        .collect();
    writeln!(out, ".outputs {}", outs.join(" ")).unwrap();

    let net = |s: &SignalId| names[s.index()].as_str();
    for id in order {
        let node = netlist.node(id);
        let ins: Vec<&str> = node.inputs.iter().map(net).collect();
        match &node.kind {
            NodeKind::PrimaryInput { .. } => {}
            NodeKind::Const { value } => {
                writeln!(out, ".names {}", net(&node.outputs[0])).unwrap();
                if *value {
                    writeln!(out, "1").unwrap();
                }
            }
            NodeKind::Gate { op } => {
                let rows: &[&str] = match op {
                    GateOp::Not => &["0 1"],
                    GateOp::And2 => &["11 1"],
                    GateOp::Or2 => &["1- 1", "-1 1"],
                    GateOp::Xor2 => &["01 1", "10 1"],
                    GateOp::Mux2 => &["01- 1", "1-1 1"],
                };
                write_names(&mut out, &ins, net(&node.outputs[0]), rows.iter().map(|r| r.to_string()));
            }
            NodeKind::Lut { truth } => {
                let k = ins.len();
                let rows = (0..1usize << k).filter(|row| (truth >> row) & 1 == 1).map(|row| {
                    let cube: String = (0..k).map(|i| if (row >> i) & 1 == 1 { '1' } else { '0' }).collect();
                    if k == 0 {
                        "1".to_string()
                    } else {
                        format!("{cube} 1")
                    }
                });
                write_names(&mut out, &ins, net(&node.outputs[0]), rows);
            }
            NodeKind::FullAdder => {
                let sum = ["001 1", "010 1", "100 1", "111 1"];
                let carry = ["011 1", "101 1", "110 1", "111 1"];
                write_names(&mut out, &ins, net(&node.outputs[0]), sum.iter().map(|r| r.to_string()));
                write_names(&mut out, &ins, net(&node.outputs[1]), carry.iter().map(|r| r.to_string()));
            }
            NodeKind::HalfAdder => {
                write_names(&mut out, &ins, net(&node.outputs[0]), ["01 1", "10 1"].iter().map(|r| r.to_string()));
                write_names(&mut out, &ins, net(&node.outputs[1]), std::iter::once("11 1".to_string()));
            }
        }
    }
    for (s, port) in &buffers {
        writeln!(out, ".names {} {port}\n1 1", net(s)).unwrap();
    }
    writeln!(out, ".end").unwrap();
    Ok(out)
}

fn write_names(out: &mut String, ins: &[&str], output: &str, rows: impl Iterator<Item = String>) {
    if ins.is_empty() {
        writeln!(out, ".names {output}").unwrap();
    } else {
        writeln!(out, ".names {} {output}", ins.join(" ")).unwrap();
    }
    for r in rows {
        writeln!(out, "{r}").unwrap();
    }
}

struct NamesBlock {
    line: usize,
    inputs: Vec<String>,
    output: String,
    rows: Vec<(String, char)>,
}

/// Reads the first model of a combinational BLIF file. Every `.names` block
/// becomes a LUT node, so covers may have at most six inputs.
pub fn parse_blif(text: &str) -> Result<Netlist> {
    let mut model = String::from("top");
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut blocks: Vec<NamesBlock> = Vec::new();

    let mut logical: Vec<(usize, String)> = Vec::new();
    let mut pending = String::new();
    let mut start = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim_end();
        if pending.is_empty() {
            start = i + 1;
        }
        if let Some(body) = line.strip_suffix('\\') {
            pending.push_str(body);
            pending.push(' ');
            continue;
        }
        pending.push_str(line);
        let full = std::mem::take(&mut pending);
        if !full.trim().is_empty() {
            logical.push((start, full.trim().to_string()));
        }
    }

    let err = |line: usize, msg: &str| Error::Blif { line, msg: msg.to_string() };
    for (line, text) in logical {
        let mut toks = text.split_whitespace();
        let head = toks.next().unwrap();
        match head {
            ".model" => model = toks.next().unwrap_or("top").to_string(),
            ".inputs" => inputs.extend(toks.map(str::to_string)),
            ".outputs" => outputs.extend(toks.map(str::to_string)),
            ".names" => {
                let mut sigs: Vec<String> = toks.map(str::to_string).collect();
                let output = sigs.pop().ok_or_else(|| err(line, ".names without signals"))?;
                if sigs.len() > 6 {
                    return Err(err(line, "cover has more than six inputs"));
                }
                blocks.push(NamesBlock { line, inputs: sigs, output, rows: Vec::new() });
            }
            ".end" => break,
            d if d.starts_with('.') => return Err(err(line, &format!("unsupported directive {d}"))),
            _ => {
                let block = blocks.last_mut().ok_or_else(|| err(line, "cover row outside .names"))?;
                let parts: Vec<&str> = text.split_whitespace().collect();
                let (cube, value) = match (block.inputs.len(), parts.as_slice()) {
                    (0, [v]) => (String::new(), *v),
                    (_, [c, v]) => (c.to_string(), *v),
                    _ => return Err(err(line, "malformed cover row")),
                };
                if cube.len() != block.inputs.len() || !cube.chars().all(|c| matches!(c, '0' | '1' | '-')) {
                    return Err(err(line, "cover row width does not match .names"));
                }
                let value = match value {
                    "1" => '1',
                    "0" => '0',
                    _ => return Err(err(line, "cover output must be 0 or 1")),
                };
                block.rows.push((cube, value));
            }
        }
    }

    let mut netlist = Netlist::new(model);
    let mut nets: HashMap<String, SignalId> = HashMap::new();
    for (bus, bits) in group_ports(&inputs).map_err(|m| err(0, &m))? {
        let signals = netlist.add_input_bus(bus, bits.len());
        for (name, s) in bits.into_iter().zip(signals) {
            nets.insert(name, s);
        }
    }

    let by_output: HashMap<&str, usize> = blocks.iter().enumerate().map(|(i, b)| (b.output.as_str(), i)).collect();
    let mut state = vec![0u8; blocks.len()]; // 0 new, 1 visiting, 2 done
    for root in 0..blocks.len() {
        let mut stack = vec![(root, false)];
        while let Some((b, expanded)) = stack.pop() {
            if expanded {
                let block = &blocks[b];
                let ins: Vec<SignalId> = block.inputs.iter().map(|n| nets[n.as_str()]).collect();
                let s = netlist.lut(cover_truth(block), &ins);
                nets.insert(block.output.clone(), s);
                state[b] = 2;
                continue;
            }
            match state[b] {
                2 => continue,
                1 => return Err(err(blocks[b].line, "combinational cycle")),
                _ => {}
            }
            state[b] = 1;
            stack.push((b, true));
            for name in &blocks[b].inputs {
                if nets.contains_key(name.as_str()) {
                    continue;
                }
                let dep = *by_output
                    .get(name.as_str())
                    .ok_or_else(|| err(blocks[b].line, &format!("undriven net {name}")))?;
                if state[dep] == 1 {
                    return Err(err(blocks[b].line, "combinational cycle"));
                }
                if state[dep] == 0 {
                    stack.push((dep, false));
                }
            }
        }
    }

    for (bus, bits) in group_ports(&outputs).map_err(|m| err(0, &m))? {
        let signals = bits
            .iter()
            .map(|n| nets.get(n.as_str()).copied().ok_or_else(|| err(0, &format!("undriven output {n}"))))
            .collect::<Result<Vec<_>>>()?;
        netlist.set_output_bus(bus, signals);
    }
    Ok(netlist)
}

fn cover_truth(block: &NamesBlock) -> u64 {
    let k = block.inputs.len();
    let mut on = 0u64;
    let off_set = block.rows.first().is_some_and(|(_, v)| *v == '0');
    for (cube, _) in &block.rows {
        for row in 0..1usize << k {
            let hit = cube.chars().enumerate().all(|(i, c)| match c {
                '1' => (row >> i) & 1 == 1,
                '0' => (row >> i) & 1 == 0,
                _ => true,
            });
            if hit {
                on |= 1 << row;
            }
        }
    }
    if off_set {
        let mask = if k == 6 { !0 } else { (1u64 << (1 << k)) - 1 };
        !on & mask
    } else {
        on
    }
}

/// Groups `name[idx]` ports into little-endian buses, in first-seen order.
fn group_ports(ports: &[String]) -> std::result::Result<Vec<(String, Vec<String>)>, String> {
    let mut order: Vec<String> = Vec::new();
    let mut buses: BTreeMap<String, BTreeMap<usize, String>> = BTreeMap::new();
    for p in ports {
        let (bus, idx) = match p.rfind('[') {
            Some(open) if p.ends_with(']') => {
                let idx = p[open + 1..p.len() - 1].parse::<usize>().map_err(|_| format!("bad port index in {p}"))?;
                (p[..open].to_string(), idx)
            }
            _ => (p.clone(), 0),
        };
        if !buses.contains_key(&bus) {
            order.push(bus.clone());
        }
        if buses.entry(bus).or_default().insert(idx, p.clone()).is_some() {
            return Err(format!("duplicate port {p}"));
        }
    }
    order
        .into_iter()
        .map(|bus| {
            let bits = buses.remove(&bus).unwrap();
            if bits.keys().copied().ne(0..bits.len()) {
                return Err(format!("bus {bus} has gaps"));
            }
            Ok((bus, bits.into_values().collect()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{simulate, Assignment};

    #[test]
    fn xor_exports_one_cover() {
        let mut n = Netlist::new("x");
        let a = n.add_input_bus("a", 2);
        let y = n.xor(a[0], a[1]);
        n.set_output_bus("y", vec![y]);
        let text = export_blif(&n).unwrap();
        let names: Vec<&str> = text.lines().filter(|l| l.starts_with(".names")).collect();
        assert_eq!(names, vec![".names a[0] a[1] y[0]"]);
        assert!(text.contains("\n01 1\n10 1\n"));
    }

    #[test]
    fn full_adder_expands_to_parity_and_majority() {
        let mut n = Netlist::new("fa");
        let a = n.add_input_bus("a", 3);
        let (s, c) = n.full_adder(a[0], a[1], a[2]);
        n.set_output_bus("s", vec![s]);
        n.set_output_bus("c", vec![c]);
        let text = export_blif(&n).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with(".names")).count(), 2);
        assert!(text.contains(".names a[0] a[1] a[2] s[0]\n001 1\n010 1\n100 1\n111 1\n"));
        assert!(text.contains(".names a[0] a[1] a[2] c[0]\n011 1\n101 1\n110 1\n111 1\n"));
    }

    #[test]
    fn unnamed_bus_is_rejected() {
        let mut n = Netlist::new("u");
        let a = n.add_input_bus("", 1);
        n.set_output_bus("y", a);
        assert!(matches!(export_blif(&n), Err(Error::UnnamedBus("input"))));
    }

    #[test]
    fn reader_handles_dont_cares_offsets_and_constants() {
        let text = "\
.model m
.inputs a[0] a[1] \\
  a[2]
.outputs y[0] y[1] y[2]
# mux written with don't cares
.names a[0] a[1] a[2] y[0]
01- 1
1-1 1
.names a[0] a[1] y[1]
11 0
.names y[2]
1
.end
";
        let n = parse_blif(text).unwrap();
        for v in 0..8u128 {
            let r = simulate(&n, &Assignment::from([("a".to_string(), v)])).unwrap()["y"];
            let (s, a, b) = (v & 1, (v >> 1) & 1, (v >> 2) & 1);
            let mux = if s == 1 { b } else { a };
            let nand = 1 - (s & a);
            assert_eq!(r, mux | (nand << 1) | (1 << 2), "v={v}");
        }
    }

    #[test]
    fn reader_rejects_cycles_and_latches() {
        let cyc = ".model c\n.inputs a\n.outputs y\n.names x y\n1 1\n.names y x\n1 1\n.end\n";
        assert!(parse_blif(cyc).is_err());
        let latch = ".model l\n.inputs a\n.outputs y\n.latch a y 0\n.end\n";
        assert!(parse_blif(latch).is_err());
    }
}
