use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use doubleduty::analysis::{analyze, Report};
use doubleduty::arch::{ArchSpec, ArchVariant};
use doubleduty::harness::{
    default_filler, fill_base_circuits, fill_budget, load_config, run_artificial_stress, run_fill_stress, run_sweep,
    HarnessConfig,
};
use doubleduty::lutmap::{map_to_luts, MappedNetlist};
use doubleduty::netlist::{export_blif, parse_blif};
use doubleduty::pack::{legality_check, pack, PackOptions};
use doubleduty::ppgen::{generate_generic, generate_unrolled, Multiplication, Operand};
use doubleduty::reduce::{cascade_reduce, reduce, Algorithm, CascadeOptions};
use doubleduty::verify::{check_equivalent, check_product};
use doubleduty::Netlist;

#[derive(Parser)]
#[command(name = "ddsynth", version, about = "Soft-multiplier synthesis and Double-Duty packing flow")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// baseline, dd5 or dd6 (overrides the config file)
    #[arg(long, global = true)]
    arch: Option<ArchVariant>,
    /// cascade, wallace or dadda
    #[arg(long, global = true, default_value = "cascade")]
    algorithm: Algorithm,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON file with optional "arch" and "harness" sections
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// CSV instead of JSON where a table makes sense
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Args, Clone)]
struct Operands {
    /// Multiplicand width in bits
    #[arg(long)]
    width: Option<u32>,
    /// Constant multiplier (decimal, 0x or 0b)
    #[arg(long, value_parser = parse_u64)]
    constant: Option<u64>,
    /// Generic multiplier A x B, e.g. 8x8
    #[arg(long, value_parser = parse_dims)]
    generic: Option<(u32, u32)>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate and reduce a multiplier
    Synth {
        #[command(flatten)]
        ops: Operands,
        /// Disable chain deduplication (Cascade only)
        #[arg(long)]
        no_dedup: bool,
        /// Emit BLIF instead of JSON
        #[arg(long)]
        blif: bool,
    },
    /// Map a netlist to K-input LUTs
    Map {
        input: PathBuf,
        #[arg(short, long, default_value_t = 6)]
        k: usize,
        #[arg(long)]
        blif: bool,
    },
    /// Map (if needed) and pack a netlist
    Pack {
        input: PathBuf,
        #[command(flatten)]
        pack: PackArgs,
    },
    /// Map, pack and report area, delay and concurrency
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        pack: PackArgs,
    },
    /// Check a netlist against integer multiplication or another netlist
    Verify {
        input: PathBuf,
        #[command(flatten)]
        ops: Operands,
        /// Reference netlist to compare against
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Area and concurrency of the stress circuit as LUTs are added
    StressArtificial {
        #[arg(long)]
        adder_bits: Option<usize>,
        #[arg(long)]
        pool: Option<usize>,
        /// Comma-separated LUT counts
        #[arg(long, value_delimiter = ',')]
        lut_counts: Option<Vec<usize>>,
    },
    /// Largest number of filler instances that fit beside each base circuit
    StressFill {
        /// Base circuit; defaults to the generated set
        #[arg(long)]
        base: Option<PathBuf>,
        /// Filler circuit; defaults to the generated multiplier and LUT blob
        #[arg(long)]
        filler: Option<PathBuf>,
        #[arg(long)]
        headroom: Option<f64>,
    },
    /// Full flow over widths, constants, algorithms, architectures and seeds
    Sweep {
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<u32>>,
        #[arg(long)]
        random_constants: Option<usize>,
        #[arg(long, value_delimiter = ',', value_parser = parse_u64)]
        constants: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Sweep only the --algorithm and --arch given
        #[arg(long)]
        single: bool,
    },
}

#[derive(Args, Clone)]
struct PackArgs {
    #[arg(long)]
    lb_budget: Option<usize>,
    /// Only cluster logic that shares signals
    #[arg(long)]
    related_only: bool,
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.replace('_', "");
    let r = if let Some(h) = s.strip_prefix("0x") {
        u64::from_str_radix(h, 16)
    } else if let Some(b) = s.strip_prefix("0b") {
        u64::from_str_radix(b, 2)
    } else {
        s.parse()
    };
    r.map_err(|e| e.to_string())
}

fn parse_dims(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected AxB")?;
    Ok((a.parse().map_err(|_| "bad width")?, b.parse().map_err(|_| "bad width")?))
}

struct Ctx {
    arch: ArchSpec,
    harness: HarnessConfig,
    g: Global,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<()> {
        let mut text = text.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.g.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn pack_opts(&self, a: &PackArgs) -> PackOptions {
        PackOptions { unrelated_clustering: !a.related_only, lb_budget: a.lb_budget, seed: self.g.seed, ..Default::default() }
    }
}

fn read_netlist(path: &Path) -> Result<Netlist> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let n = if path.extension().is_some_and(|e| e == "blif") { parse_blif(&text)? } else { Netlist::from_json(&text)? };
    Ok(n)
}

fn multiplication(ops: &Operands) -> Result<Multiplication> {
    Ok(match (ops.generic, ops.width, ops.constant) {
        (Some((a, b)), None, None) => generate_generic(a, b)?,
        (None, Some(w), Some(c)) => generate_unrolled(w, c)?,
        _ => bail!("give either --generic AxB or both --width and --constant"),
    })
}

fn mapped(n: &Netlist) -> Result<MappedNetlist> {
    Ok(map_to_luts(n, 6)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (arch, harness) = match &cli.global.config {
        Some(p) => load_config(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?, cli.global.arch)?,
        None => (ArchSpec::defaults(cli.global.arch.unwrap_or(ArchVariant::Baseline)), HarnessConfig::default()),
    };
    let ctx = Ctx { arch, harness, g: cli.global };
    match cli.cmd {
        Cmd::Synth { ops, no_dedup, blif } => {
            let m = multiplication(&ops)?;
            let r = match ctx.g.algorithm {
                Algorithm::Cascade => cascade_reduce(&m, &CascadeOptions { dedup: !no_dedup, ..Default::default() })?,
                alg => reduce(&m, alg)?,
            };
            ctx.emit(&if blif { export_blif(&r.netlist)? } else { r.netlist.to_json()? })?;
        }
        Cmd::Map { input, k, blif } => {
            let n = read_netlist(&input)?;
            let m = map_to_luts(&n, k)?;
            let v = check_equivalent(&n, &m.netlist, ctx.g.seed)?;
            if !v.passed() {
                eprintln!("mapping changed the function: {:?}", v.mismatch);
                return Ok(ExitCode::FAILURE);
            }
            ctx.emit(&if blif { export_blif(&m.netlist)? } else { m.netlist.to_json()? })?;
        }
        Cmd::Pack { input, pack: p } => {
            let m = mapped(&read_netlist(&input)?)?;
            let placement = pack(&m, &ctx.arch, &ctx.pack_opts(&p))?;
            let diags = legality_check(&placement, &m.netlist, &ctx.arch);
            ctx.emit(&placement.to_json()?)?;
            if !diags.is_empty() {
                eprintln!("illegal placement: {}", serde_json::to_string(&diags)?);
                return Ok(ExitCode::FAILURE);
            }
            if !placement.is_complete() {
                eprintln!("{} elements did not fit the logic-block budget", placement.unplaced.len());
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Analyze { input, pack: p } => {
            let m = mapped(&read_netlist(&input)?)?;
            let placement = pack(&m, &ctx.arch, &ctx.pack_opts(&p))?;
            let diags = legality_check(&placement, &m.netlist, &ctx.arch);
            if !diags.is_empty() {
                eprintln!("illegal placement: {}", serde_json::to_string(&diags)?);
                return Ok(ExitCode::FAILURE);
            }
            let report = analyze(&placement, &m, &ctx.arch)?;
            if ctx.g.csv {
                ctx.emit(&format!("{}\n{}", Report::CSV_HEADER, report.csv_row()))?;
            } else {
                ctx.emit(&report.to_json()?)?;
            }
        }
        Cmd::Verify { input, ops, against } => {
            let n = read_netlist(&input)?;
            let verdict = match against {
                Some(other) => check_equivalent(&read_netlist(&other)?, &n, ctx.g.seed)?,
                None => {
                    let operand = match (ops.generic, ops.constant) {
                        (Some((_, b)), None) => Operand::Symbolic { width: b },
                        (None, Some(c)) => Operand::Constant { value: c },
                        _ => bail!("give --against, --generic AxB or --constant"),
                    };
                    check_product(&n, &operand, ctx.g.seed)?
                }
            };
            ctx.emit(&serde_json::to_string_pretty(&verdict)?)?;
            if !verdict.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::StressArtificial { adder_bits, pool, lut_counts } => {
            let mut spec = ctx.harness.stress.clone();
            spec.adder_bits = adder_bits.unwrap_or(spec.adder_bits);
            spec.shared_input_pool = pool.unwrap_or(spec.shared_input_pool);
            if ctx.g.seed != 0 {
                spec.seed = ctx.g.seed;
            }
            let counts = lut_counts.unwrap_or_else(|| ctx.harness.lut_counts.clone());
            let archs: Vec<ArchSpec> = match ctx.g.arch {
                Some(_) => vec![ctx.arch.clone()],
                None => ArchVariant::ALL.iter().map(|v| ArchSpec::defaults(*v)).collect(),
            };
            let curve = run_artificial_stress(&spec, &counts, &archs)?;
            ctx.emit(&if ctx.g.csv { curve.to_csv() } else { serde_json::to_string_pretty(&curve)? })?;
        }
        Cmd::StressFill { base, filler, headroom } => {
            let fill = &ctx.harness.fill;
            let bases = match base {
                Some(p) => vec![read_netlist(&p)?],
                None => fill_base_circuits(fill.seed)?,
            };
            let filler = match filler {
                Some(p) => read_netlist(&p)?,
                None => default_filler(fill.seed)?,
            };
            let variants: Vec<ArchVariant> = match ctx.g.arch {
                Some(v) => vec![v],
                None => vec![ArchVariant::Baseline, ArchVariant::Dd5],
            };
            let mut results = Vec::new();
            for b in &bases {
                let budget = fill_budget(b, headroom.unwrap_or(fill.headroom))?;
                for &v in &variants {
                    let spec = if v == ctx.arch.variant { ctx.arch.clone() } else { ArchSpec::defaults(v) };
                    results.push((b.name().to_string(), run_fill_stress(b, &filler, &spec, budget)?));
                }
            }
            if ctx.g.csv {
                let mut out = String::from("base,arch,lb-budget,max-instances,alms,lbs,area-mwta,luts,concurrent-luts\n");
                for (name, r) in &results {
                    out.push_str(&format!(
                        "{name},{},{},{},{},{},{:.3},{},{}\n",
                        r.arch, r.lb_budget, r.max_instances, r.alms, r.lbs, r.total_area, r.luts, r.concurrent_luts
                    ));
                }
                ctx.emit(&out)?;
            } else {
                let rows: Vec<serde_json::Value> = results
                    .iter()
                    .map(|(name, r)| serde_json::json!({ "base": name, "result": r }))
                    .collect();
                ctx.emit(&serde_json::to_string_pretty(&rows)?)?;
            }
        }
        Cmd::Sweep { widths, random_constants, constants, seeds, single } => {
            let mut spec = ctx.harness.sweep.clone();
            spec.widths = widths.unwrap_or(spec.widths);
            spec.random_constants = random_constants.unwrap_or(spec.random_constants);
            spec.constants = constants.unwrap_or(spec.constants);
            spec.seeds = seeds.unwrap_or(spec.seeds);
            if single {
                spec.algorithms = vec![ctx.g.algorithm];
                spec.archs = vec![ctx.arch.variant];
            }
            let report = run_sweep(&spec)?;
            ctx.emit(&if ctx.g.csv { report.to_csv() } else { report.to_json()? })?;
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} sweep cells failed");
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
