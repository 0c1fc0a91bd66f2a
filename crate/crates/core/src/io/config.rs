//! Sectioned `key = value` run configuration with SI unit suffixes.
//!
//! ```text
//! [photodiode]
//! c_pd = 10fF
//! texp = 9.5us
//!
//! [pixel]
//! topology = case_ii
//! vrst = 2.2V
//! ```
//!
//! Unknown sections and keys are rejected. Keys left out take the library
//! defaults and are listed in [`ParsedConfig::defaulted`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device::{MosfetParams, OxRamParams, PhotodiodeParams};
use crate::error::{Result, SimError};
use crate::experiments::{
    AnchorQuantity, CalibrationAnchors, CalibrationOptions, PixelTargets, ReadableWindow, SweepGrid, SweepSpec,
    Table1Setup,
};
use crate::pixel::{preprogram, GateWaveform, PixelConfig, Topology, ELEVATED_VRST};
use crate::solver::SolverOptions;

pub const SECTIONS: [&str; 8] = ["photodiode", "oxram", "selector", "pixel", "sweep", "solver", "window", "calibration"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Current,
    Capacitance,
    Time,
    Voltage,
    Resistance,
    Length,
    Plain,
    Count,
    Topology,
}

impl Unit {
    /// Accepted suffixes with their decimal exponents, longest first.
    fn suffixes(self) -> &'static [(&'static str, i32)] {
        match self {
            Unit::Current => &[("fA", -15), ("pA", -12), ("nA", -9), ("uA", -6), ("mA", -3), ("A", 0)],
            Unit::Capacitance => &[("fF", -15), ("pF", -12), ("F", 0)],
            Unit::Time => &[("ns", -9), ("us", -6), ("ms", -3), ("s", 0)],
            Unit::Voltage => &[("mV", -3), ("V", 0)],
            Unit::Resistance => &[("kohm", 3), ("Mohm", 6), ("Gohm", 9)],
            Unit::Length => &[("nm", 0)],
            Unit::Plain | Unit::Count | Unit::Topology => &[],
        }
    }

    /// Suffix written when serializing, in the base unit.
    fn base_suffix(self) -> &'static str {
        match self {
            Unit::Current => "A",
            Unit::Capacitance => "F",
            Unit::Time => "s",
            Unit::Voltage => "V",
            Unit::Length => "nm",
            Unit::Resistance | Unit::Plain | Unit::Count | Unit::Topology => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Range {
    Any,
    Positive,
    NonNegative,
    Fraction,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Value {
    fn num(&self) -> f64 {
        match self {
            Value::Num(x) => *x,
            Value::Int(n) => *n as f64,
            Value::Text(_) => f64::NAN,
        }
    }

    fn int(&self) -> u64 {
        match self {
            Value::Int(n) => *n,
            _ => 0,
        }
    }
}

type Getter = fn(&RunConfig) -> Option<Value>;
type Setter = fn(&mut RunConfig, Value);

struct Field {
    section: &'static str,
    key: &'static str,
    unit: Unit,
    range: Range,
    get: Getter,
    set: Setter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelSection {
    pub topology: Topology,
    /// `None` picks 1.42 V, or the elevated level for `case_ii`.
    pub vrst: Option<f64>,
    /// Constant selector gate level (V).
    pub vg: f64,
    pub vs_level: f64,
    /// Pre-programmed read resistance; `None` keeps the per-case default.
    pub r_init: Option<f64>,
    pub noise_seed: Option<u64>,
}

impl Default for PixelSection {
    fn default() -> Self {
        Self {
            topology: Topology::Bare3T,
            vrst: None,
            vg: crate::calibrated::GATE_LEVEL,
            vs_level: 0.0,
            r_init: None,
            noise_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CalibrationSection {
    pub anchors: CalibrationAnchors,
    pub options: CalibrationOptions,
    pub targets: PixelTargets,
}

/// Every domain value a run can be configured with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Reset level is taken from [`PixelSection::vrst`].
    pub photodiode: PhotodiodeParams,
    pub oxram: OxRamParams,
    pub selector: MosfetParams,
    pub pixel: PixelSection,
    pub sweep: SweepGrid,
    pub solver: SolverOptions,
    pub window: ReadableWindow,
    pub calibration: CalibrationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            photodiode: PhotodiodeParams::default(),
            oxram: OxRamParams::default(),
            selector: MosfetParams::default(),
            pixel: PixelSection::default(),
            sweep: SweepGrid::default(),
            solver: SolverOptions::default(),
            window: ReadableWindow::default(),
            calibration: CalibrationSection::default(),
        }
    }
}

fn anchor_get(c: &RunConfig, q: AnchorQuantity, tolerance: bool) -> Option<Value> {
    c.calibration.anchors.anchors.iter().find(|a| a.quantity == q).map(|a| Value::Num(if tolerance { a.tolerance } else { a.value }))
}

fn anchor_set(c: &mut RunConfig, q: AnchorQuantity, tolerance: bool, v: f64) {
    if let Some(a) = c.calibration.anchors.anchors.iter_mut().find(|a| a.quantity == q) {
        if tolerance {
            a.tolerance = v;
        } else {
            a.value = v;
        }
    }
}

macro_rules! num_field {
    ($section:literal, $key:literal, $unit:expr, $range:expr, |$c:ident| $place:expr) => {
        Field {
            section: $section,
            key: $key,
            unit: $unit,
            range: $range,
            get: |$c: &RunConfig| Some(Value::Num($place)),
            set: |$c: &mut RunConfig, v: Value| $place = v.num(),
        }
    };
}

macro_rules! count_field {
    ($section:literal, $key:literal, |$c:ident| $place:expr, $ty:ty) => {
        Field {
            section: $section,
            key: $key,
            unit: Unit::Count,
            range: Range::NonNegative,
            get: |$c: &RunConfig| Some(Value::Int($place as u64)),
            set: |$c: &mut RunConfig, v: Value| $place = v.int() as $ty,
        }
    };
}

macro_rules! anchor_field {
    ($key:literal, $unit:expr, $q:expr, $tol:expr) => {
        Field {
            section: "calibration",
            key: $key,
            unit: $unit,
            range: Range::Positive,
            get: |c: &RunConfig| anchor_get(c, $q, $tol),
            set: |c: &mut RunConfig, v: Value| anchor_set(c, $q, $tol, v.num()),
        }
    };
}

fn fields() -> Vec<Field> {
    use Range::*;
    use Unit::*;
    vec![
        num_field!("photodiode", "c_pd", Capacitance, Positive, |c| c.photodiode.c_pd),
        num_field!("photodiode", "fwc_electrons", Plain, Positive, |c| c.photodiode.fwc_electrons),
        num_field!("photodiode", "reset_noise_electrons", Plain, NonNegative, |c| c.photodiode.reset_noise_electrons),
        num_field!("photodiode", "texp", Time, Positive, |c| c.photodiode.texp),
        num_field!("photodiode", "trst", Time, NonNegative, |c| c.photodiode.trst),
        num_field!("oxram", "oxide_thickness", Length, Positive, |c| c.oxram.oxide_thickness),
        num_field!("oxram", "gap_min", Length, NonNegative, |c| c.oxram.gap_min),
        num_field!("oxram", "gap_max", Length, Positive, |c| c.oxram.gap_max),
        num_field!("oxram", "cf_decay", Plain, Positive, |c| c.oxram.cf_decay),
        num_field!("oxram", "cf_field", Plain, Positive, |c| c.oxram.cf_field),
        num_field!("oxram", "ox_decay", Plain, Positive, |c| c.oxram.ox_decay),
        num_field!("oxram", "ox_field", Plain, Positive, |c| c.oxram.ox_field),
        num_field!("oxram", "i0_cf", Current, Positive, |c| c.oxram.i0_cf),
        num_field!("oxram", "i0_ox", Current, Positive, |c| c.oxram.i0_ox),
        num_field!("oxram", "growth_rate", Plain, Positive, |c| c.oxram.growth_rate),
        num_field!("oxram", "rupture_rate", Plain, Positive, |c| c.oxram.rupture_rate),
        num_field!("oxram", "growth_field", Voltage, Positive, |c| c.oxram.growth_field),
        num_field!("oxram", "rupture_field", Voltage, Positive, |c| c.oxram.rupture_field),
        num_field!("oxram", "c_pox", Capacitance, NonNegative, |c| c.oxram.c_pox),
        num_field!("selector", "vth", Voltage, NonNegative, |c| c.selector.vth),
        num_field!("selector", "kprime", Plain, Positive, |c| c.selector.kprime),
        num_field!("selector", "lambda", Plain, NonNegative, |c| c.selector.lambda),
        Field {
            section: "pixel",
            key: "topology",
            unit: Topology,
            range: Any,
            get: |c| Some(Value::Text(c.pixel.topology.as_str().to_string())),
            set: |c, v| {
                if let Value::Text(s) = v {
                    c.pixel.topology = crate::pixel::Topology::parse(&s).unwrap_or(c.pixel.topology);
                }
            },
        },
        Field {
            section: "pixel",
            key: "vrst",
            unit: Voltage,
            range: Positive,
            get: |c| c.pixel.vrst.map(Value::Num),
            set: |c, v| c.pixel.vrst = Some(v.num()),
        },
        num_field!("pixel", "vg", Voltage, NonNegative, |c| c.pixel.vg),
        num_field!("pixel", "vs_level", Voltage, Any, |c| c.pixel.vs_level),
        Field {
            section: "pixel",
            key: "r_init",
            unit: Resistance,
            range: Positive,
            get: |c| c.pixel.r_init.map(Value::Num),
            set: |c, v| c.pixel.r_init = Some(v.num()),
        },
        Field {
            section: "pixel",
            key: "noise_seed",
            unit: Count,
            range: NonNegative,
            get: |c| c.pixel.noise_seed.map(Value::Int),
            set: |c, v| c.pixel.noise_seed = Some(v.int()),
        },
        num_field!("sweep", "i_min", Current, Positive, |c| c.sweep.i_min),
        num_field!("sweep", "i_max", Current, Positive, |c| c.sweep.i_max),
        count_field!("sweep", "points_per_decade", |c| c.sweep.points_per_decade, usize),
        num_field!("solver", "rel_tol", Plain, Positive, |c| c.solver.rel_tol),
        num_field!("solver", "abs_tol_v", Voltage, Positive, |c| c.solver.abs_tol_v),
        num_field!("solver", "abs_tol_gap", Length, Positive, |c| c.solver.abs_tol_gap),
        num_field!("solver", "max_step", Time, Positive, |c| c.solver.max_step),
        num_field!("solver", "min_step", Time, Positive, |c| c.solver.min_step),
        count_field!("solver", "max_trace_points", |c| c.solver.max_trace_points, usize),
        num_field!("solver", "low_fraction", Plain, Fraction, |c| c.solver.thresholds.low_fraction),
        num_field!("solver", "high_fraction", Plain, Fraction, |c| c.solver.thresholds.high_fraction),
        num_field!("solver", "abrupt_fraction", Plain, Fraction, |c| c.solver.thresholds.abrupt_fraction),
        num_field!("solver", "abrupt_window", Time, Positive, |c| c.solver.thresholds.abrupt_window),
        num_field!("window", "min_detect", Voltage, Positive, |c| c.window.min_detect),
        num_field!("window", "max_swing", Voltage, Positive, |c| c.window.max_swing),
        num_field!("window", "dark_sigmas", Plain, NonNegative, |c| c.window.dark_sigmas),
        count_field!("calibration", "seed", |c| c.calibration.options.seed, u64),
        count_field!("calibration", "restarts", |c| c.calibration.options.restarts, usize),
        count_field!("calibration", "max_evaluations", |c| c.calibration.options.max_evaluations, usize),
        num_field!("calibration", "regularization", Plain, NonNegative, |c| c.calibration.options.regularization),
        num_field!("calibration", "log_bound", Plain, Positive, |c| c.calibration.options.log_bound),
        num_field!("calibration", "restart_spread", Plain, NonNegative, |c| c.calibration.options.restart_spread),
        anchor_field!("r_set", Resistance, AnchorQuantity::RSet, false),
        anchor_field!("r_set_tolerance", Plain, AnchorQuantity::RSet, true),
        anchor_field!("r_reset", Resistance, AnchorQuantity::RReset, false),
        anchor_field!("r_reset_tolerance", Plain, AnchorQuantity::RReset, true),
        anchor_field!("i_reset", Current, AnchorQuantity::IReset, false),
        anchor_field!("i_reset_tolerance", Plain, AnchorQuantity::IReset, true),
        anchor_field!("t_reset", Time, AnchorQuantity::TReset, false),
        anchor_field!("t_reset_tolerance", Plain, AnchorQuantity::TReset, true),
        num_field!("calibration", "read_voltage", Voltage, Positive, |c| c.calibration.anchors.read_voltage),
        num_field!("calibration", "reset_voltage", Voltage, Positive, |c| c.calibration.anchors.reset_voltage),
        num_field!("calibration", "set_gap_fraction", Plain, Fraction, |c| c.calibration.anchors.set_gap_fraction),
        num_field!("calibration", "dark_vpd", Voltage, Positive, |c| c.calibration.targets.gate.dark_vpd),
        num_field!("calibration", "gate_lo", Voltage, NonNegative, |c| c.calibration.targets.gate.lo),
        num_field!("calibration", "gate_hi", Voltage, Positive, |c| c.calibration.targets.gate.hi),
        count_field!("calibration", "gate_scan_points", |c| c.calibration.targets.gate.scan_points, usize),
        num_field!("calibration", "bare_dr_db", Plain, Positive, |c| c.calibration.targets.bare_dr_db),
    ]
}

/// Parse `raw` as a value of `unit` in its base SI unit.
fn parse_value(raw: &str, unit: Unit) -> std::result::Result<Value, String> {
    match unit {
        Unit::Topology => Topology::parse(raw)
            .map(|t| Value::Text(t.as_str().to_string()))
            .ok_or_else(|| format!("unknown topology `{raw}` (expected bare, case_i, case_ii or case_iii)")),
        Unit::Count => raw.parse::<u64>().map(Value::Int).map_err(|_| format!("`{raw}` is not a non-negative integer")),
        _ => {
            let (number, scale) = unit
                .suffixes()
                .iter()
                .find_map(|&(sfx, m)| raw.strip_suffix(sfx).map(|n| (n.trim_end(), m)))
                .unwrap_or((raw, 0));
            let x: f64 = number.parse().map_err(|_| {
                let accepted: Vec<&str> = unit.suffixes().iter().map(|s| s.0).collect();
                if accepted.is_empty() {
                    format!("`{raw}` is not a number")
                } else {
                    format!("`{raw}` is not a number with an optional unit suffix {}", accepted.join("/"))
                }
            })?;
            // One rounding: powers of ten up to 1e22 are exact.
            let p = 10f64.powi(scale.abs());
            let x = if scale < 0 { x / p } else { x * p };
            if !x.is_finite() {
                return Err(format!("`{raw}` is not finite"));
            }
            Ok(Value::Num(x))
        }
    }
}

/// Exposure current with an optional unit suffix, e.g. `1nA` or `2.5e-12`.
pub fn parse_current(raw: &str) -> Result<f64> {
    let v = parse_value(raw.trim(), Unit::Current)
        .map_err(|message| SimError::Config { line: 0, key: "iexp".into(), message })?
        .num();
    check_range(v, Range::NonNegative).map_err(|message| SimError::Config { line: 0, key: "iexp".into(), message })?;
    Ok(v)
}

fn check_range(x: f64, range: Range) -> std::result::Result<(), String> {
    let ok = match range {
        Range::Any => true,
        Range::Positive => x > 0.0,
        Range::NonNegative => x >= 0.0,
        Range::Fraction => (0.0..=1.0).contains(&x),
    };
    if ok {
        Ok(())
    } else {
        let want = match range {
            Range::Positive => "> 0",
            Range::NonNegative => ">= 0",
            Range::Fraction => "in [0, 1]",
            Range::Any => "",
        };
        Err(format!("value {x} out of range (must be {want})"))
    }
}

fn format_value(v: &Value, unit: Unit) -> String {
    match v {
        Value::Num(x) => format!("{x:?}{}", unit.base_suffix()),
        Value::Int(n) => n.to_string(),
        Value::Text(s) => s.clone(),
    }
}

/// Parsed configuration plus the keys that were left at their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: RunConfig,
    /// `section.key` names not present in the input.
    pub defaulted: BTreeSet<String>,
    /// Line of each key that was given.
    pub lines: BTreeMap<String, usize>,
}

pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let table = fields();
    let mut config = RunConfig::default();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut section: Option<&'static str> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| SimError::Config { line, key: content.into(), message: "unterminated section header".into() })?
                .trim();
            section = Some(SECTIONS.iter().copied().find(|s| *s == name).ok_or_else(|| SimError::Config {
                line,
                key: name.into(),
                message: format!("unknown section (expected one of {})", SECTIONS.join(", ")),
            })?);
            continue;
        }
        let (key, raw) = content.split_once('=').ok_or_else(|| SimError::Config {
            line,
            key: content.into(),
            message: "expected `key = value`".into(),
        })?;
        let (key, raw) = (key.trim(), raw.trim());
        let sec = section.ok_or_else(|| SimError::Config {
            line,
            key: key.into(),
            message: "key outside of any section".into(),
        })?;
        let field = table.iter().find(|f| f.section == sec && f.key == key).ok_or_else(|| SimError::Config {
            line,
            key: key.into(),
            message: format!("unknown key in [{sec}]"),
        })?;
        let full = format!("{sec}.{key}");
        if let Some(prev) = lines.get(&full) {
            return Err(SimError::Config { line, key: key.into(), message: format!("duplicate key (first on line {prev})") });
        }
        let err = |message: String| SimError::Config { line, key: key.into(), message };
        let value = parse_value(raw, field.unit).map_err(err)?;
        if let Value::Num(_) | Value::Int(_) = value {
            check_range(value.num(), field.range).map_err(err)?;
        }
        (field.set)(&mut config, value);
        lines.insert(full, line);
    }
    let defaulted = table
        .iter()
        .map(|f| format!("{}.{}", f.section, f.key))
        .filter(|k| !lines.contains_key(k))
        .collect();
    let parsed = ParsedConfig { config, defaulted, lines };
    parsed.validate()?;
    Ok(parsed)
}

pub fn load_config(path: &Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}

impl ParsedConfig {
    /// Cross-field checks, reported against the last given key of the section.
    fn validate(&self) -> Result<()> {
        let c = &self.config;
        let blame = |section: &str, e: SimError| -> SimError {
            let (key, line) = self
                .lines
                .iter()
                .filter(|(k, _)| k.starts_with(&format!("{section}.")))
                .max_by_key(|(_, l)| **l)
                .map(|(k, l)| (k.split_once('.').map_or(k.as_str(), |s| s.1).to_string(), *l))
                .unwrap_or_else(|| (format!("[{section}]"), 0));
            SimError::Config { line, key, message: e.to_string() }
        };
        let mut pd = c.photodiode;
        pd.vrst = c.vrst();
        pd.validate().map_err(|e| blame("photodiode", e))?;
        c.oxram.validate().map_err(|e| blame("oxram", e))?;
        c.selector.validate().map_err(|e| blame("selector", e))?;
        c.solver.validate().map_err(|e| blame("solver", e))?;
        c.window.validate().map_err(|e| blame("window", e))?;
        c.calibration.anchors.validate().map_err(|e| blame("calibration", e))?;
        let grid = &c.sweep;
        if !(grid.i_min < grid.i_max) || grid.points_per_decade == 0 {
            return Err(blame(
                "sweep",
                SimError::InvalidInput("sweep needs i_min < i_max and points_per_decade >= 1".into()),
            ));
        }
        c.pixel_config().map_err(|e| blame("pixel", e))?;
        Ok(())
    }
}

impl RunConfig {
    /// Reset level after applying the per-topology default.
    pub fn vrst(&self) -> f64 {
        self.pixel.vrst.unwrap_or(match self.pixel.topology {
            Topology::HybridCaseII => ELEVATED_VRST,
            _ => PhotodiodeParams::default().vrst,
        })
    }

    /// The pixel described by the `[pixel]` section.
    pub fn pixel_config(&self) -> Result<PixelConfig> {
        let mut pd = self.photodiode;
        pd.vrst = self.vrst();
        let topology = self.pixel.topology;
        let mut config = if topology.is_hybrid() {
            PixelConfig::hybrid_with(topology, self.oxram, self.pixel.vg)?
        } else {
            PixelConfig::bare()
        };
        config.pd = pd;
        config.selector = self.selector;
        config.vs_level = self.pixel.vs_level;
        config.noise_seed = self.pixel.noise_seed;
        config.vg = GateWaveform::constant(if topology.is_hybrid() { self.pixel.vg } else { 0.0 }, pd.t_end());
        if let Some(r) = self.pixel.r_init {
            config = preprogram(&config, r)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            i_min: self.sweep.i_min,
            i_max: self.sweep.i_max,
            points_per_decade: self.sweep.points_per_decade,
            config: self.pixel_config()?,
            options: self.solver,
        })
    }

    /// Pixels of the comparison report: every case at its default reset
    /// level and initial state, sharing the photodiode and selector.
    pub fn table1_setup(&self, oxram: OxRamParams, gate_level: f64) -> Result<Table1Setup> {
        let build = |topology: Topology| {
            let mut c = self.clone();
            c.oxram = oxram;
            c.pixel.topology = topology;
            c.pixel.vrst = None;
            c.pixel.r_init = None;
            c.pixel.vg = gate_level;
            c.pixel_config()
        };
        Ok(Table1Setup {
            baseline: build(Topology::Bare3T)?,
            case_i: build(Topology::HybridCaseI)?,
            case_ii: build(Topology::HybridCaseII)?,
            case_iii: build(Topology::HybridCaseIII)?,
        })
    }

    /// Every key in canonical form; re-parsing yields the same values.
    pub fn to_text(&self) -> String {
        let table = fields();
        let mut out = String::new();
        for section in SECTIONS {
            out.push_str(&format!("[{section}]\n"));
            for f in table.iter().filter(|f| f.section == section) {
                if let Some(v) = (f.get)(self) {
                    out.push_str(&format!("{} = {}\n", f.key, format_value(&v, f.unit)));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_gives_defaults() {
        let p = parse_config("").unwrap();
        assert_eq!(p.config, RunConfig::default());
        assert_eq!(p.config.vrst(), 1.42);
        assert_eq!(p.config.photodiode.c_pd, 10e-15);
        assert_eq!(p.config.photodiode.texp, 9.5e-6);
        assert_eq!(p.config.photodiode.trst, 0.5e-6);
        assert!(p.defaulted.contains("photodiode.c_pd"));
        assert_eq!(p.defaulted.len(), fields().len());
    }

    #[test]
    fn unit_suffixes() {
        let p = parse_config("[photodiode]\nc_pd = 20fF\ntexp = 1ms\n[sweep]\ni_min = 1pA\ni_max=2.5 nA\n").unwrap();
        assert_eq!(p.config.photodiode.c_pd, 20e-15);
        assert_eq!(p.config.photodiode.texp, 1e-3);
        assert_eq!(p.config.sweep.i_min, 1e-12);
        assert!((p.config.sweep.i_max - 2.5e-9).abs() < 1e-24);
        assert!(!p.defaulted.contains("photodiode.c_pd"));
    }

    #[test]
    fn elevated_reset_for_case_ii() {
        let p = parse_config("[pixel]\ntopology = case_ii\nvrst = 2.2V\n").unwrap();
        assert_eq!(p.config.pixel_config().unwrap().pd.vrst, 2.2);
        let err = parse_config("[pixel]\ntopology = case_ii\nvrst = 1.42V\n").unwrap_err();
        assert!(matches!(err, SimError::Config { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_values_name_line_and_key() {
        let err = parse_config("[photodiode]\n\nc_pd = 10banana\n").unwrap_err();
        assert_eq!(err.to_string().split(':').next().unwrap(), "config line 3, key `c_pd`");
        assert!(matches!(parse_config("[photodiode]\nfoo = 1\n"), Err(SimError::Config { line: 2, .. })));
        assert!(matches!(parse_config("[nope]\n"), Err(SimError::Config { line: 1, .. })));
        assert!(matches!(parse_config("c_pd = 1fF\n"), Err(SimError::Config { line: 1, .. })));
        assert!(matches!(parse_config("[photodiode]\nc_pd = -1fF\n"), Err(SimError::Config { line: 2, .. })));
        assert!(matches!(parse_config("[photodiode]\nc_pd = 1ff\n"), Err(SimError::Config { line: 2, .. })));
        assert!(matches!(parse_config("[photodiode]\nc_pd = 1fF\nc_pd = 2fF\n"), Err(SimError::Config { line: 3, .. })));
        assert!(matches!(parse_config("[sweep]\ni_min = 1nA\ni_max = 1pA\n"), Err(SimError::Config { .. })));
    }

    #[test]
    fn text_round_trip() {
        let p = parse_config("[pixel]\ntopology = case_i\nr_init = 300kohm\nnoise_seed = 7\n[window]\nmin_detect = 50mV\n")
            .unwrap();
        let again = parse_config(&p.config.to_text()).unwrap();
        assert_eq!(again.config, p.config);
        assert!(again.defaulted.is_empty() || again.defaulted.iter().all(|k| k == "pixel.vrst"));
    }
}
