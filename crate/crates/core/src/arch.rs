//! Logic-block architecture model: ALM modes, pin budgets and the
//! area/delay constants of the Baseline, DD5 and DD6 variants.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::netlist::SignalId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArchVariant {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "dd5")]
    Dd5,
    #[serde(rename = "dd6")]
    Dd6,
}

impl ArchVariant {
    pub const ALL: [ArchVariant; 3] = [ArchVariant::Baseline, ArchVariant::Dd5, ArchVariant::Dd6];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchVariant::Baseline => "baseline",
            ArchVariant::Dd5 => "dd5",
            ArchVariant::Dd6 => "dd6",
        }
    }

    pub fn is_double_duty(self) -> bool {
        self != ArchVariant::Baseline
    }

    /// ALM modes the variant offers.
    pub fn modes(self) -> &'static [AlmMode] {
        use AlmMode::*;
        match self {
            ArchVariant::Baseline => &[Lut6, TwoLut5, Arith],
            ArchVariant::Dd5 => &[Lut6, TwoLut5, Arith, ArithConcurrent5],
            ArchVariant::Dd6 => &[Lut6, TwoLut5, Arith, ArithConcurrent5, ArithConcurrent6],
        }
    }
}

impl fmt::Display for ArchVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(ArchVariant::Baseline),
            "dd5" => Ok(ArchVariant::Dd5),
            "dd6" => Ok(ArchVariant::Dd6),
            _ => Err(Error::UnknownVariant(s.to_string())),
        }
    }
}

/// Per-ALM areas in minimum-width transistor areas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AreaTable {
    pub baseline_alm: f64,
    pub dd5_alm: f64,
    pub dd6_alm: f64,
    pub addmux: f64,
    pub local_xbar: f64,
    pub addmux_xbar: f64,
    /// Tile-level area overhead of a DD5 ALM over a Baseline ALM.
    pub dd5_overhead: f64,
    pub dd6_overhead: f64,
}

impl Default for AreaTable {
    fn default() -> Self {
        AreaTable {
            baseline_alm: 2167.3,
            dd5_alm: 2366.6,
            dd6_alm: 2366.6,
            addmux: 1.698,
            local_xbar: 289.6,
            addmux_xbar: 77.91,
            dd5_overhead: 0.0372,
            dd6_overhead: 0.0372,
        }
    }
}

/// Path delays in picoseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DelayTable {
    pub lb_in_to_alm_in: f64,
    pub alm_in_to_adder_baseline: f64,
    pub lb_in_to_z: f64,
    pub alm_in_to_adder_dd: f64,
    pub z_to_adder: f64,
    pub lut_delay_per_level: f64,
    pub carry_per_alm: f64,
    pub lut_out_to_alm_out: f64,
    pub dd6_output_mux_penalty: f64,
}

impl Default for DelayTable {
    fn default() -> Self {
        DelayTable {
            lb_in_to_alm_in: 72.61,
            alm_in_to_adder_baseline: 133.4,
            lb_in_to_z: 77.05,
            alm_in_to_adder_dd: 202.2,
            z_to_adder: 68.77,
            lut_delay_per_level: 150.0,
            carry_per_alm: 20.0,
            lut_out_to_alm_out: 0.0,
            dd6_output_mux_penalty: 0.0,
        }
    }
}

impl DelayTable {
    /// Relative change of the Z path into the adder versus the Baseline
    /// A–H path.
    pub fn z_path_delta(&self) -> f64 {
        self.z_to_adder / self.alm_in_to_adder_baseline - 1.0
    }

    /// Relative change of the Double-Duty A–H path into the adder.
    pub fn general_path_delta(&self) -> f64 {
        self.alm_in_to_adder_dd / self.alm_in_to_adder_baseline - 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ArchSpec {
    pub variant: ArchVariant,
    pub alms_per_lb: usize,
    pub lb_inputs: usize,
    pub ext_pin_util: f64,
    pub general_alm_inputs: usize,
    pub z_inputs: usize,
    pub addmux_xbar_pins: usize,
    pub alm_outputs: usize,
    pub area_table: AreaTable,
    pub delay_table: DelayTable,
}

impl ArchSpec {
    pub fn defaults(variant: ArchVariant) -> Self {
        let dd = variant.is_double_duty();
        ArchSpec {
            variant,
            alms_per_lb: 10,
            lb_inputs: 60,
            ext_pin_util: 0.9,
            general_alm_inputs: 8,
            z_inputs: if dd { 4 } else { 0 },
            addmux_xbar_pins: if dd { 10 } else { 0 },
            alm_outputs: 4,
            area_table: AreaTable::default(),
            delay_table: DelayTable::default(),
        }
    }

    /// External input pins a logic block may use.
    pub fn lb_input_budget(&self) -> usize {
        (self.lb_inputs as f64 * self.ext_pin_util + 1e-9).floor() as usize
    }

    /// Effective area of one ALM tile.
    pub fn alm_area(&self) -> f64 {
        let t = &self.area_table;
        match self.variant {
            ArchVariant::Baseline => t.baseline_alm,
            ArchVariant::Dd5 => t.baseline_alm * (1.0 + t.dd5_overhead),
            ArchVariant::Dd6 => t.baseline_alm * (1.0 + t.dd6_overhead),
        }
    }

    /// The listed (untiled) ALM area of the variant.
    pub fn listed_alm_area(&self) -> f64 {
        let t = &self.area_table;
        match self.variant {
            ArchVariant::Baseline => t.baseline_alm,
            ArchVariant::Dd5 => t.dd5_alm,
            ArchVariant::Dd6 => t.dd6_alm,
        }
    }

    /// Delay from an ALM's A–H inputs into its adder.
    pub fn general_to_adder(&self) -> f64 {
        if self.variant.is_double_duty() {
            self.delay_table.alm_in_to_adder_dd
        } else {
            self.delay_table.alm_in_to_adder_baseline
        }
    }

    pub fn check(&self) -> Result<()> {
        if !self.variant.is_double_duty() && (self.z_inputs != 0 || self.addmux_xbar_pins != 0) {
            return Err(Error::InconsistentArch("baseline has no Z inputs or AddMux crossbar".into()));
        }
        if self.addmux_xbar_pins > self.lb_inputs {
            return Err(Error::InconsistentArch(format!(
                "addmux-xbar-pins {} exceeds lb-inputs {}",
                self.addmux_xbar_pins, self.lb_inputs
            )));
        }
        if !(0.0..=1.0).contains(&self.ext_pin_util) {
            return Err(Error::InconsistentArch(format!("ext-pin-util {} is not a fraction", self.ext_pin_util)));
        }
        if self.alms_per_lb == 0 || self.alm_outputs < 2 {
            return Err(Error::InconsistentArch("logic block needs ALMs with at least two outputs".into()));
        }
        if self.variant.is_double_duty() && self.z_inputs == 0 {
            return Err(Error::InconsistentArch("Double-Duty variants need Z inputs".into()));
        }
        let t = &self.area_table;
        for (name, v) in [("dd5-overhead", t.dd5_overhead), ("dd6-overhead", t.dd6_overhead)] {
            if v >= 1.0 {
                return Err(Error::InconsistentArch(format!("{name} {v} is not a fraction")));
            }
        }
        if t.dd5_alm < t.baseline_alm || t.dd6_alm < t.baseline_alm {
            return Err(Error::InconsistentArch("Double-Duty ALM smaller than the Baseline ALM".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Loads the defaults of `variant` and applies `overrides`, keyed by field
/// name (`lb-inputs`, `dd5-alm`, ...). Table fields may also be addressed as
/// `area-table.dd5-alm`.
pub fn load_arch(variant: ArchVariant, overrides: &BTreeMap<String, f64>) -> Result<ArchSpec> {
    let mut doc = serde_json::to_value(ArchSpec::defaults(variant))?;
    for (key, v) in overrides {
        let slot = field_slot(&mut doc, key)?;
        if *v < 0.0 {
            return Err(Error::NegativeField { field: key.clone(), value: *v });
        }
        *slot = if slot.is_u64() {
            if v.fract() != 0.0 {
                return Err(Error::InconsistentArch(format!("field `{key}` must be an integer, got {v}")));
            }
            Value::from(*v as u64)
        } else {
            Value::from(*v)
        };
    }
    let spec: ArchSpec = serde_json::from_value(doc)?;
    spec.check()?;
    Ok(spec)
}

fn field_slot<'a>(doc: &'a mut Value, key: &str) -> Result<&'a mut Value> {
    let unknown = || Error::UnknownField(key.to_string());
    let (table, field) = match key.split_once('.') {
        Some((t, f)) => (Some(t), f),
        None => {
            let top = doc.as_object().expect("object");
            if top.contains_key(key) && key != "variant" && !top[key].is_object() {
                (None, key)
            } else if top["area-table"].as_object().expect("object").contains_key(key) {
                (Some("area-table"), key)
            } else {
                (Some("delay-table"), key)
            }
        }
    };
    let obj = match table {
        Some(t @ ("area-table" | "delay-table")) => doc.get_mut(t).ok_or_else(unknown)?,
        Some(_) => return Err(unknown()),
        None => doc,
    };
    match obj.get_mut(field) {
        Some(v) if v.is_number() => Ok(v),
        _ => Err(unknown()),
    }
}

/// Parses an architecture JSON document. Every field is optional and falls
/// back to the defaults of its `variant` (or `default_variant`).
pub fn arch_from_json(text: &str, default_variant: ArchVariant) -> Result<ArchSpec> {
    let value: Value = serde_json::from_str(text)?;
    arch_from_value(&value, default_variant)
}

pub fn arch_from_value(value: &Value, default_variant: ArchVariant) -> Result<ArchSpec> {
    let obj = value.as_object().ok_or_else(|| Error::InconsistentArch("architecture must be a JSON object".into()))?;
    let variant = match obj.get("variant") {
        Some(v) => v.as_str().ok_or_else(|| Error::UnknownVariant(v.to_string()))?.parse()?,
        None => default_variant,
    };
    let mut overrides = BTreeMap::new();
    for (k, v) in obj {
        match (k.as_str(), v) {
            ("variant", _) => {}
            ("area-table" | "delay-table", Value::Object(inner)) => {
                for (f, x) in inner {
                    let x = x.as_f64().ok_or_else(|| Error::UnknownField(format!("{k}.{f}")))?;
                    overrides.insert(format!("{k}.{f}"), x);
                }
            }
            (_, Value::Number(n)) => {
                overrides.insert(k.clone(), n.as_f64().expect("finite"));
            }
            _ => return Err(Error::UnknownField(k.clone())),
        }
    }
    load_arch(variant, &overrides)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlmMode {
    Lut6,
    TwoLut5,
    Arith,
    ArithConcurrent5,
    ArithConcurrent6,
}

impl AlmMode {
    pub fn is_concurrent(self) -> bool {
        matches!(self, AlmMode::ArithConcurrent5 | AlmMode::ArithConcurrent6)
    }

    pub fn has_adders(self) -> bool {
        matches!(self, AlmMode::Arith | AlmMode::ArithConcurrent5 | AlmMode::ArithConcurrent6)
    }

    /// `(LUT count, inputs per LUT)`.
    pub fn lut_capacity(self) -> (usize, usize) {
        match self {
            AlmMode::Lut6 | AlmMode::ArithConcurrent6 => (1, 6),
            AlmMode::TwoLut5 | AlmMode::ArithConcurrent5 => (2, 5),
            AlmMode::Arith => (0, 0),
        }
    }

    pub fn adder_capacity(self) -> usize {
        if self.has_adders() {
            2
        } else {
            0
        }
    }
}

/// Operand-preprocessing 4-LUTs an arithmetic ALM can hold.
pub const MAX_FEEDERS: usize = 4;
pub const FEEDER_WIDTH: usize = 4;

/// What one ALM is asked to hold. LUTs are given by their input signals;
/// adder operands list the distinct non-constant operand signals that are
/// not computed by one of the `feeders` (LUTs driving only this ALM's
/// adders).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlmContents {
    pub luts: Vec<Vec<SignalId>>,
    pub adder_bits: usize,
    pub adder_operands: Vec<SignalId>,
    pub feeders: Vec<Vec<SignalId>>,
}

impl AlmContents {
    /// Distinct signals read through the A–H inputs under `mode`.
    pub fn general_inputs(&self, mode: AlmMode) -> usize {
        let mut all: Vec<SignalId> = self.luts.iter().flatten().copied().collect();
        all.extend(self.feeders.iter().flatten());
        if mode == AlmMode::Arith {
            all.extend(&self.adder_operands);
        }
        all.sort();
        all.dedup();
        all.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModeViolation {
    Unavailable,
    TooManyLuts { luts: usize, max: usize },
    LutTooWide { inputs: usize, max: usize },
    GeneralInputs { needed: usize, available: usize },
    TooManyAdderBits { bits: usize, max: usize },
    TooManyFeeders { feeders: usize, max: usize },
    FeederTooWide { inputs: usize, max: usize },
    ZInputs { needed: usize, available: usize },
    OutputPins { needed: usize, available: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Legality {
    pub legal: bool,
    pub violations: Vec<ModeViolation>,
}

/// Checks `contents` against `mode` on the architecture `spec`.
pub fn mode_legal(spec: &ArchSpec, mode: AlmMode, contents: &AlmContents) -> Legality {
    let mut v = Vec::new();
    if !spec.variant.modes().contains(&mode) {
        v.push(ModeViolation::Unavailable);
    }
    let (max_luts, width) = mode.lut_capacity();
    if contents.luts.len() > max_luts {
        v.push(ModeViolation::TooManyLuts { luts: contents.luts.len(), max: max_luts });
    }
    for lut in &contents.luts {
        let mut ins = lut.clone();
        ins.sort();
        ins.dedup();
        if ins.len() > width {
            v.push(ModeViolation::LutTooWide { inputs: ins.len(), max: width });
        }
    }
    if contents.adder_bits > mode.adder_capacity() {
        v.push(ModeViolation::TooManyAdderBits { bits: contents.adder_bits, max: mode.adder_capacity() });
    }
    let max_feeders = if mode == AlmMode::Arith { MAX_FEEDERS } else { 0 };
    if contents.feeders.len() > max_feeders {
        v.push(ModeViolation::TooManyFeeders { feeders: contents.feeders.len(), max: max_feeders });
    }
    for f in &contents.feeders {
        let mut ins = f.clone();
        ins.sort();
        ins.dedup();
        if ins.len() > FEEDER_WIDTH {
            v.push(ModeViolation::FeederTooWide { inputs: ins.len(), max: FEEDER_WIDTH });
        }
    }
    let general = contents.general_inputs(mode);
    if general > spec.general_alm_inputs {
        v.push(ModeViolation::GeneralInputs { needed: general, available: spec.general_alm_inputs });
    }
    if mode.is_concurrent() {
        let mut ops = contents.adder_operands.clone();
        ops.sort();
        ops.dedup();
        if ops.len() > spec.z_inputs {
            v.push(ModeViolation::ZInputs { needed: ops.len(), available: spec.z_inputs });
        }
    }
    let outputs = contents.adder_bits + contents.luts.len();
    if outputs > spec.alm_outputs {
        v.push(ModeViolation::OutputPins { needed: outputs, available: spec.alm_outputs });
    }
    Legality { legal: v.is_empty(), violations: v }
}

/// First legal mode for `contents`, preferring non-concurrent modes.
pub fn best_mode(spec: &ArchSpec, contents: &AlmContents) -> Option<AlmMode> {
    let order: &[AlmMode] = if contents.adder_bits > 0 || !contents.adder_operands.is_empty() || !contents.feeders.is_empty() {
        &[AlmMode::Arith, AlmMode::ArithConcurrent5, AlmMode::ArithConcurrent6]
    } else {
        &[AlmMode::TwoLut5, AlmMode::Lut6]
    };
    order.iter().copied().find(|m| mode_legal(spec, *m, contents).legal)
}
