//! Benchmark generators, packing stress tests and parameter sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, area};
use crate::arch::{ArchSpec, ArchVariant};
use crate::error::{Error, Result};
use crate::lutmap::{map_to_luts, MappedNetlist};
use crate::netlist::{stats, Netlist, SignalId};
use crate::pack::{legality_check, pack, PackOptions, Placement};
use crate::ppgen::{generate_generic, generate_unrolled};
use crate::reduce::{cascade_reduce, reduce, wallace_reduce, Algorithm, CascadeOptions, Reduction};

/// Adder bits per chain in the stress circuit: one logic block's worth.
pub const STRESS_CHAIN_BITS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct StressCircuitSpec {
    pub adder_bits: usize,
    pub lut_count: usize,
    /// Distinct input signals per chain-sized group.
    pub shared_input_pool: usize,
    pub lut_fanin: usize,
    pub seed: u64,
}

impl Default for StressCircuitSpec {
    fn default() -> Self {
        StressCircuitSpec { adder_bits: 500, lut_count: 0, shared_input_pool: 12, lut_fanin: 5, seed: 1 }
    }
}

impl StressCircuitSpec {
    pub fn check(&self) -> Result<()> {
        if !self.adder_bits.is_multiple_of(2) {
            return Err(Error::InvalidStressSpec(format!("adder-bits {} is odd", self.adder_bits)));
        }
        if self.shared_input_pool < self.lut_fanin || self.lut_fanin == 0 || self.lut_fanin > 6 {
            return Err(Error::InvalidStressSpec(format!(
                "pool of {} cannot feed {}-input LUTs",
                self.shared_input_pool, self.lut_fanin
            )));
        }
        if self.shared_input_pool < 2 {
            return Err(Error::InvalidStressSpec("pool needs at least two signals".into()));
        }
        Ok(())
    }
}

/// Random truth table over `k` inputs that depends on every input.
fn full_support_truth(rng: &mut ChaCha8Rng, k: usize) -> u64 {
    let mask = if k == 6 { !0 } else { (1u64 << (1 << k)) - 1 };
    loop {
        let t = rng.gen::<u64>() & mask;
        let depends = (0..k).all(|i| (0..1usize << k).any(|r| r >> i & 1 == 0 && (t >> r & 1) != (t >> (r | 1 << i) & 1)));
        if depends {
            return t;
        }
    }
}

/// Adder chains of one logic block each, with operands drawn from a small
/// per-chain input pool, plus `lut-count` independent LUTs whose inputs come
/// from the same pools (LUT `i` uses pool `i mod chains`). The LUT list for a
/// given seed is a prefix of the list for any larger count.
pub fn gen_stress_circuit(spec: &StressCircuitSpec) -> Result<Netlist> {
    spec.check()?;
    let mut n = Netlist::new(format!("stress{}x{}", spec.adder_bits, spec.lut_count));
    let groups = spec.adder_bits.div_ceil(STRESS_CHAIN_BITS).max(1);
    let pools: Vec<Vec<SignalId>> =
        (0..groups).map(|g| n.add_input_bus(format!("pool{g}"), spec.shared_input_pool)).collect();
    let zero = n.constant(false);
    let mut chain_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sums = Vec::new();
    let mut left = spec.adder_bits;
    for pool in &pools {
        let bits = left.min(STRESS_CHAIN_BITS);
        left -= bits;
        if bits == 0 {
            break;
        }
        let mut a = Vec::with_capacity(bits);
        let mut b = Vec::with_capacity(bits);
        for _ in 0..bits {
            let x = chain_rng.gen_range(0..pool.len());
            let mut y = chain_rng.gen_range(0..pool.len() - 1);
            if y >= x {
                y += 1;
            }
            a.push(pool[x]);
            b.push(pool[y]);
        }
        sums.extend(n.add_chain(&a, &b, zero).sums);
    }
    n.set_output_bus("s", sums);
    let mut lut_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x0005_eed1u64 << 32);
    let mut outs = Vec::with_capacity(spec.lut_count);
    for i in 0..spec.lut_count {
        let pool = &pools[i % groups];
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        for j in 0..spec.lut_fanin {
            let k = lut_rng.gen_range(j..idx.len());
            idx.swap(j, k);
        }
        let ins: Vec<SignalId> = idx[..spec.lut_fanin].iter().map(|&j| pool[j]).collect();
        let truth = full_support_truth(&mut lut_rng, spec.lut_fanin);
        outs.push(n.lut(truth, &ins));
    }
    if !outs.is_empty() {
        n.set_output_bus("l", outs);
    }
    Ok(n)
}

/// Maps, packs and analyzes one netlist; the placement must be legal.
pub fn run_flow(netlist: &Netlist, spec: &ArchSpec, opts: &PackOptions) -> Result<FlowResult> {
    let mapped = map_to_luts(netlist, 6)?;
    let placement = pack(&mapped, spec, opts)?;
    let diags = legality_check(&placement, &mapped.netlist, spec);
    if !diags.is_empty() {
        return Err(Error::InvalidNetlist(format!("packer produced an illegal placement: {:?}", diags[0])));
    }
    let report = analyze(&placement, &mapped, spec)?;
    Ok(FlowResult { mapped, placement, report })
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub mapped: MappedNetlist,
    pub placement: Placement,
    pub report: crate::analysis::Report,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct StressPoint {
    pub arch: ArchVariant,
    pub lut_count: usize,
    pub total_area: f64,
    pub alms: usize,
    pub concurrent_luts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct StressCurve {
    pub spec: StressCircuitSpec,
    pub points: Vec<StressPoint>,
}

impl StressCurve {
    pub fn series(&self, arch: ArchVariant) -> Vec<&StressPoint> {
        self.points.iter().filter(|p| p.arch == arch).collect()
    }

    /// Largest concurrent-LUT count reached on `arch`.
    pub fn plateau(&self, arch: ArchVariant) -> usize {
        self.series(arch).iter().map(|p| p.concurrent_luts).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("arch,lut-count,area-mwta,alms,concurrent-luts\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{:.3},{},{}", p.arch, p.lut_count, p.total_area, p.alms, p.concurrent_luts);
        }
        out
    }
}

/// Area and concurrency of the stress circuit for every LUT count on every
/// architecture, packed with unrelated clustering.
pub fn run_artificial_stress(spec: &StressCircuitSpec, lut_counts: &[usize], archs: &[ArchSpec]) -> Result<StressCurve> {
    spec.check()?;
    let cells: Vec<(usize, usize)> =
        (0..archs.len()).flat_map(|a| lut_counts.iter().map(move |&l| (a, l))).collect();
    let points: Result<Vec<StressPoint>> = cells
        .par_iter()
        .map(|&(a, lut_count)| {
            let arch = &archs[a];
            let netlist = gen_stress_circuit(&StressCircuitSpec { lut_count, ..spec.clone() })?;
            let opts = PackOptions { unrelated_clustering: true, ..Default::default() };
            let flow = run_flow(&netlist, arch, &opts)?;
            Ok(StressPoint {
                arch: arch.variant,
                lut_count,
                total_area: flow.report.total_area,
                alms: flow.report.alm_count,
                concurrent_luts: flow.placement.concurrency.concurrent_luts,
            })
        })
        .collect();
    Ok(StressCurve { spec: spec.clone(), points: points? })
}

/// Filler logic: an 8-bit generic multiplier plus a blob of random LUTs.
pub fn default_filler(seed: u64) -> Result<Netlist> {
    let mult = generate_generic(8, 8)?;
    let mut n = wallace_reduce(&mult)?.netlist;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = n.add_input_bus("blob", 16);
    let mut signals = pool.clone();
    let mut outs = Vec::new();
    for _ in 0..48 {
        let mut ins = Vec::new();
        while ins.len() < 5 {
            let s = signals[rng.gen_range(0..signals.len())];
            if !ins.contains(&s) {
                ins.push(s);
            }
        }
        let y = n.lut(full_support_truth(&mut rng, 5), &ins);
        signals.push(y);
        outs.push(y);
    }
    n.set_output_bus("blob_out", outs);
    Ok(n)
}

/// Base circuits for the fill test: constant multipliers with varied widths,
/// each beside a little control logic.
pub fn fill_base_circuits(seed: u64) -> Result<Vec<Netlist>> {
    let configs: [(&str, u32, usize, usize); 3] = [("mac-narrow", 8, 24, 60), ("mac-wide", 16, 12, 120), ("mac-mixed", 12, 16, 240)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, width, count, luts) in configs {
        let mut n = Netlist::new(name);
        for i in 0..count {
            let c: u64 = rng.gen_range(1u64 << (width - 1)..1u64 << width) | 1;
            let m = generate_unrolled(width, c)?;
            let r = cascade_reduce(&m, &CascadeOptions::default())?;
            n.append(&r.netlist, &format!("m{i}_"));
        }
        let ctl = n.add_input_bus("ctl", 24);
        let mut signals = ctl.clone();
        let mut outs = Vec::new();
        for _ in 0..luts {
            let mut ins = Vec::new();
            while ins.len() < 5 {
                let s = signals[rng.gen_range(0..signals.len())];
                if !ins.contains(&s) {
                    ins.push(s);
                }
            }
            let y = n.lut(full_support_truth(&mut rng, 5), &ins);
            signals.push(y);
            outs.push(y);
        }
        n.set_output_bus("ctl_out", outs);
        out.push(n);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FillResult {
    pub arch: ArchVariant,
    pub lb_budget: usize,
    pub max_instances: usize,
    pub alms: usize,
    pub lbs: usize,
    pub total_area: f64,
    pub concurrent_luts: usize,
    pub luts: usize,
}

fn with_fillers(base: &Netlist, filler: &Netlist, count: usize) -> Netlist {
    let mut n = base.clone();
    for i in 0..count {
        n.append(filler, &format!("fill{i}_"));
    }
    n
}

/// Largest number of filler instances that fit, alongside `base`, into
/// `lb_budget` logic blocks of `spec`.
pub fn run_fill_stress(base: &Netlist, filler: &Netlist, spec: &ArchSpec, lb_budget: usize) -> Result<FillResult> {
    let opts = PackOptions { lb_budget: Some(lb_budget), ..Default::default() };
    let fits = |count: usize| -> Result<Option<(MappedNetlist, Placement)>> {
        let mapped = map_to_luts(&with_fillers(base, filler, count), 6)?;
        let p = pack(&mapped, spec, &opts)?;
        Ok(p.is_complete().then_some((mapped, p)))
    };
    let Some(mut best) = fits(0)? else {
        let p = pack(&map_to_luts(base, 6)?, spec, &opts)?;
        return Err(Error::BaseUnpackable(p.unplaced.len()));
    };
    let mut lo = 0;
    let mut hi = 1;
    while let Some(r) = fits(hi)? {
        lo = hi;
        best = r;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        match fits(mid)? {
            Some(r) => {
                lo = mid;
                best = r;
            }
            None => hi = mid,
        }
    }
    let (mapped, placement) = best;
    Ok(FillResult {
        arch: spec.variant,
        lb_budget,
        max_instances: lo,
        alms: placement.alm_count(),
        lbs: placement.lb_count(),
        total_area: area(&placement, spec),
        concurrent_luts: placement.concurrency.concurrent_luts,
        luts: stats(&mapped.netlist).luts,
    })
}

/// Logic blocks the base circuit needs on the Baseline architecture, grown by
/// `headroom` to leave space for filler.
pub fn fill_budget(base: &Netlist, headroom: f64) -> Result<usize> {
    let spec = ArchSpec::defaults(ArchVariant::Baseline);
    let p = pack(&map_to_luts(base, 6)?, &spec, &PackOptions::default())?;
    Ok(((p.lb_count() as f64) * (1.0 + headroom)).ceil() as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SweepSpec {
    pub widths: Vec<u32>,
    /// Random constants per width.
    pub random_constants: usize,
    pub constants: Vec<u64>,
    /// Probability that a random constant bit (below the top bit) is zero.
    pub sparsity: f64,
    pub algorithms: Vec<Algorithm>,
    pub archs: Vec<ArchVariant>,
    pub seeds: Vec<u64>,
    /// Seed for drawing the random constants.
    pub constant_seed: u64,
    pub dedup: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            widths: vec![6, 8, 10, 12, 16],
            random_constants: 4,
            constants: Vec::new(),
            sparsity: 0.5,
            algorithms: Algorithm::ALL.to_vec(),
            archs: ArchVariant::ALL.to_vec(),
            seeds: vec![1, 2, 3],
            constant_seed: 7,
            dedup: true,
        }
    }
}

impl SweepSpec {
    pub fn check(&self) -> Result<()> {
        let empty = self.widths.is_empty()
            || (self.random_constants == 0 && self.constants.is_empty())
            || self.algorithms.is_empty()
            || self.archs.is_empty()
            || self.seeds.is_empty();
        if empty {
            return Err(Error::InvalidStressSpec("sweep has an empty dimension".into()));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(Error::InvalidStressSpec(format!("sparsity {} is not in [0, 1)", self.sparsity)));
        }
        if self.widths.iter().any(|w| *w == 0 || *w > 64) {
            return Err(Error::InvalidStressSpec("widths must be within 1..=64".into()));
        }
        Ok(())
    }

    /// `(width, constant)` circuits of the sweep.
    pub fn circuits(&self) -> Vec<(u32, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.constant_seed);
        let mut out = Vec::new();
        for &w in &self.widths {
            for &c in &self.constants {
                out.push((w, c));
            }
            for _ in 0..self.random_constants {
                let mut c = 1u64 << (w - 1);
                for b in 0..w - 1 {
                    if rng.gen::<f64>() >= self.sparsity {
                        c |= 1 << b;
                    }
                }
                out.push((w, c));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepRow {
    pub arch: ArchVariant,
    pub algorithm: Algorithm,
    pub width: u32,
    pub constant: u64,
    pub seed: u64,
    pub full_adders: usize,
    pub final_chain_adders: usize,
    pub luts: usize,
    pub alms: usize,
    pub lbs: usize,
    pub area_mwta: f64,
    pub critical_path_ps: f64,
    pub adp: f64,
    pub concurrent_luts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const SWEEP_CSV_HEADER: &str =
    "arch,algorithm,width,constant,seed,full-adders,luts,alms,lbs,area-mwta,critical-path-ps,adp,concurrent-luts";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3},{:.3},{:.3},{}",
            self.arch,
            self.algorithm,
            self.width,
            self.constant,
            self.seed,
            self.full_adders,
            self.luts,
            self.alms,
            self.lbs,
            self.area_mwta,
            self.critical_path_ps,
            self.adp,
            self.concurrent_luts
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GeomeanRow {
    pub arch: ArchVariant,
    pub algorithm: Algorithm,
    pub cells: usize,
    pub full_adders: f64,
    pub luts: f64,
    pub alms: f64,
    pub area_mwta: f64,
    pub critical_path_ps: f64,
    pub adp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub geomeans: Vec<GeomeanRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn geomean(&self, arch: ArchVariant, algorithm: Algorithm) -> Option<&GeomeanRow> {
        self.geomeans.iter().find(|g| g.arch == arch && g.algorithm == algorithm)
    }
}

/// Geometric mean over the positive entries; 0 when there are none.
pub fn geomean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().filter(|v| *v > 0.0).fold((0.0, 0usize), |(s, n), v| (s + v.ln(), n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).exp()
    }
}

/// Reduces one constant multiplier with `algorithm`, honoring `dedup` for
/// the Cascade tree.
pub fn synthesize(width: u32, constant: u64, algorithm: Algorithm, dedup: bool) -> Result<Reduction> {
    let m = generate_unrolled(width, constant)?;
    match algorithm {
        Algorithm::Cascade => cascade_reduce(&m, &CascadeOptions { dedup, ..Default::default() }),
        _ => reduce(&m, algorithm),
    }
}

fn sweep_cell(
    width: u32,
    constant: u64,
    algorithm: Algorithm,
    arch: ArchVariant,
    seed: u64,
    dedup: bool,
) -> SweepRow {
    let mut row = SweepRow {
        arch,
        algorithm,
        width,
        constant,
        seed,
        full_adders: 0,
        final_chain_adders: 0,
        luts: 0,
        alms: 0,
        lbs: 0,
        area_mwta: 0.0,
        critical_path_ps: 0.0,
        adp: 0.0,
        concurrent_luts: 0,
        error: None,
    };
    let result = (|| -> Result<()> {
        let r = synthesize(width, constant, algorithm, dedup)?;
        let spec = ArchSpec::defaults(arch);
        let flow = run_flow(&r.netlist, &spec, &PackOptions { seed, ..Default::default() })?;
        let s = stats(&flow.mapped.netlist);
        row.full_adders = s.full_adders;
        row.final_chain_adders = r.final_chain_len();
        row.luts = s.luts;
        row.alms = flow.report.alm_count;
        row.lbs = flow.report.lb_count;
        row.area_mwta = flow.report.total_area;
        row.critical_path_ps = flow.report.critical_path;
        row.adp = flow.report.adp;
        row.concurrent_luts = flow.placement.concurrency.concurrent_luts;
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Runs every (circuit, algorithm, architecture, seed) cell in parallel.
/// Geometric means first average each circuit over seeds.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    spec.check()?;
    let mut cells = Vec::new();
    for &arch in &spec.archs {
        for &alg in &spec.algorithms {
            for (w, c) in spec.circuits() {
                for &seed in &spec.seeds {
                    cells.push((w, c, alg, arch, seed));
                }
            }
        }
    }
    let rows: Vec<SweepRow> =
        cells.par_iter().map(|&(w, c, alg, arch, seed)| sweep_cell(w, c, alg, arch, seed, spec.dedup)).collect();
    let geomeans = aggregate(&rows, spec);
    Ok(SweepReport { spec: spec.clone(), rows, geomeans })
}

/// Seed-averaged per-circuit values, then geometric means per
/// (architecture, algorithm).
pub fn aggregate(rows: &[SweepRow], spec: &SweepSpec) -> Vec<GeomeanRow> {
    let mut out = Vec::new();
    for &arch in &spec.archs {
        for &alg in &spec.algorithms {
            let mut per: BTreeMap<(u32, u64), Vec<&SweepRow>> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.arch == arch && r.algorithm == alg && r.error.is_none()) {
                per.entry((r.width, r.constant)).or_default().push(r);
            }
            let mean = |f: &dyn Fn(&SweepRow) -> f64| -> Vec<f64> {
                per.values().map(|rs| rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64).collect()
            };
            out.push(GeomeanRow {
                arch,
                algorithm: alg,
                cells: per.len(),
                full_adders: geomean(mean(&|r| r.full_adders as f64)),
                luts: geomean(mean(&|r| r.luts as f64)),
                alms: geomean(mean(&|r| r.alms as f64)),
                area_mwta: geomean(mean(&|r| r.area_mwta)),
                critical_path_ps: geomean(mean(&|r| r.critical_path_ps)),
                adp: geomean(mean(&|r| r.adp)),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FillSpec {
    /// Extra logic blocks over the Baseline packing of each base circuit.
    pub headroom: f64,
    pub seed: u64,
}

impl Default for FillSpec {
    fn default() -> Self {
        FillSpec { headroom: 0.25, seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub stress: StressCircuitSpec,
    pub lut_counts: Vec<usize>,
    pub fill: FillSpec,
    pub sweep: SweepSpec,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            stress: StressCircuitSpec::default(),
            lut_counts: (0..=500).step_by(25).collect(),
            fill: FillSpec::default(),
            sweep: SweepSpec::default(),
        }
    }
}

/// Configuration file: `{"arch": {...}, "harness": {...}}`, both optional.
/// `variant` overrides the architecture variant named in the file.
pub fn load_config(text: &str, variant: Option<ArchVariant>) -> Result<(ArchSpec, HarnessConfig)> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or_else(|| Error::UnknownField("configuration must be a JSON object".into()))?;
    if let Some(k) = obj.keys().find(|k| *k != "arch" && *k != "harness") {
        return Err(Error::UnknownField(k.clone()));
    }
    let arch = match obj.get("arch") {
        Some(a) => {
            let mut a = a.clone();
            if let (Some(v), Some(o)) = (variant, a.as_object_mut()) {
                o.insert("variant".into(), serde_json::Value::String(v.to_string()));
            }
            crate::arch::arch_from_value(&a, variant.unwrap_or(ArchVariant::Baseline))?
        }
        None => ArchSpec::defaults(variant.unwrap_or(ArchVariant::Baseline)),
    };
    let harness = match obj.get("harness") {
        Some(h) => serde_json::from_value(h.clone())?,
        None => HarnessConfig::default(),
    };
    Ok((arch, harness))
}

/// Netlists used as a regression corpus: reduced multipliers of every
/// algorithm, stress circuits and the fill-test bases.
pub fn corpus() -> Result<Vec<Netlist>> {
    let mut out = Vec::new();
    for alg in Algorithm::ALL {
        for (w, c) in [(4, 0b1011), (6, 0b110101), (8, 0b0101_0101), (8, 0xff), (12, 0b1011_0110_1101)] {
            let mut n = synthesize(w, c, alg, true)?.netlist;
            n.set_name(format!("{alg}-{w}x{c}"));
            out.push(n);
        }
        let mut g = reduce(&generate_generic(5, 5)?, alg)?.netlist;
        g.set_name(format!("{alg}-generic5x5"));
        out.push(g);
    }
    for lut_count in [0, 100, 400] {
        out.push(gen_stress_circuit(&StressCircuitSpec { lut_count, ..Default::default() })?);
    }
    out.extend(fill_base_circuits(1)?);
    out.push(default_filler(1)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stress_circuit_shape() {
        let n = gen_stress_circuit(&StressCircuitSpec::default()).unwrap();
        let s = stats(&n);
        assert_eq!((s.full_adders, s.luts), (500, 0));
        let big = gen_stress_circuit(&StressCircuitSpec { lut_count: 50, ..Default::default() }).unwrap();
        let small = gen_stress_circuit(&StressCircuitSpec { lut_count: 20, ..Default::default() }).unwrap();
        // Same seed: the shorter LUT list is a prefix of the longer one.
        let luts = |n: &Netlist| -> Vec<_> {
            n.nodes().iter().filter(|x| matches!(x.kind, crate::netlist::NodeKind::Lut { .. })).cloned().collect()
        };
        assert_eq!(luts(&small)[..], luts(&big)[..20]);
        assert!(gen_stress_circuit(&StressCircuitSpec { adder_bits: 3, ..Default::default() }).is_err());
        assert!(gen_stress_circuit(&StressCircuitSpec { shared_input_pool: 4, ..Default::default() }).is_err());
    }

    #[test]
    fn config_file_sections() {
        let (arch, h) = load_config(r#"{"arch": {"variant": "dd5", "lb-inputs": 50}}"#, None).unwrap();
        assert_eq!((arch.variant, arch.lb_inputs), (ArchVariant::Dd5, 50));
        assert_eq!(h, HarnessConfig::default());
        let (arch, _) = load_config(r#"{"arch": {"variant": "dd5"}}"#, Some(ArchVariant::Dd6)).unwrap();
        assert_eq!(arch.variant, ArchVariant::Dd6);
        let (_, h) = load_config(r#"{"harness": {"stress": {"shared-input-pool": 16}, "lut-counts": [0, 10]}}"#, None).unwrap();
        assert_eq!((h.stress.shared_input_pool, h.lut_counts), (16, vec![0, 10]));
        assert!(load_config(r#"{"harnes": {}}"#, None).is_err());
        assert!(load_config(r#"{"harness": {"sweep": {"widths": [8], "colour": 1}}}"#, None).is_err());
    }

    #[test]
    fn geomean_ignores_non_positive() {
        assert!((geomean([2.0, 8.0]) - 4.0).abs() < 1e-12);
        assert!((geomean([2.0, 0.0, 8.0]) - 4.0).abs() < 1e-12);
        assert_eq!(geomean([]), 0.0);
    }

    #[test]
    fn single_cell_sweep_matches_direct_flow() {
        let spec = SweepSpec {
            widths: vec![6],
            random_constants: 0,
            constants: vec![0b101101],
            algorithms: vec![Algorithm::Cascade],
            archs: vec![ArchVariant::Dd5],
            seeds: vec![1],
            ..Default::default()
        };
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.rows.len(), 1);
        let r = synthesize(6, 0b101101, Algorithm::Cascade, true).unwrap();
        let flow = run_flow(&r.netlist, &ArchSpec::defaults(ArchVariant::Dd5), &PackOptions { seed: 1, ..Default::default() })
            .unwrap();
        assert_eq!(report.rows[0].alms, flow.report.alm_count);
        assert_eq!(report.rows[0].adp, flow.report.adp);
        assert!((report.geomeans[0].alms - flow.report.alm_count as f64).abs() < 1e-9);
    }

    #[test]
    fn sweep_csv_is_deterministic() {
        let spec = SweepSpec { widths: vec![5, 6], random_constants: 2, seeds: vec![1, 2], ..Default::default() };
        let a = run_sweep(&spec).unwrap().to_csv();
        let b = run_sweep(&spec).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(SWEEP_CSV_HEADER));
    }

    #[test]
    fn fill_with_zero_instances_succeeds() {
        let base = gen_stress_circuit(&StressCircuitSpec { adder_bits: 40, lut_count: 10, ..Default::default() }).unwrap();
        let mut filler = Netlist::new("f");
        let x = filler.add_input_bus("x", 5);
        let y = filler.lut(0x1234_5678, &x);
        filler.set_output_bus("y", vec![y]);
        let budget = fill_budget(&base, 0.0).unwrap();
        let r = run_fill_stress(&base, &filler, &ArchSpec::defaults(ArchVariant::Baseline), budget).unwrap();
        assert_eq!(r.lbs, budget);
        let roomy = run_fill_stress(&base, &filler, &ArchSpec::defaults(ArchVariant::Baseline), budget + 1).unwrap();
        assert!(roomy.max_instances > r.max_instances);
        assert!(run_fill_stress(&base, &filler, &ArchSpec::defaults(ArchVariant::Baseline), 1).is_err());
    }
}
