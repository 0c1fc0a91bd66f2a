//! Node equations of the bare 3T pixel and the hybrid pixel with a 1T-1R
//! OxRAM branch hanging off the photodiode node.
//!
//! The hybrid branch is PD node -> OxRAM -> internal node -> selector drain,
//! selector source at `vs_level`. The internal node carries no capacitance,
//! so its voltage is the root of the series KCL at every evaluation.

use serde::{Deserialize, Serialize};

use crate::device::{
    selector_current, state_from_resistance, MosfetParams, Orientation, OxRamParams, OxRamState,
    PhotodiodeParams,
};
use crate::error::{ensure_finite, Result, SimError};

/// Read bias used for every resistance level (V).
pub const READ_VOLTAGE: f64 = 0.1;
/// Standard reset level of the 3T pixel (V).
pub const STANDARD_VRST: f64 = 1.42;
/// Elevated reset level used for the soft-to-hard RESET case (V).
pub const ELEVATED_VRST: f64 = 2.2;
/// Pre-programmed SET level of the SET-to-RESET case (ohm).
pub const R_SET_DEFAULT: f64 = 1.25e6;
/// Pre-programmed soft-RESET level of the soft-to-hard RESET case (ohm).
pub const R_SOFT_RESET_DEFAULT: f64 = 5e6;
/// Highest gate level accepted by the waveform builder (V).
pub const MAX_GATE_LEVEL: f64 = 3.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    Bare3T,
    /// SET to RESET during exposure, BE at the PD node.
    HybridCaseI,
    /// Soft-RESET to hard-RESET, BE at the PD node, elevated reset level.
    HybridCaseII,
    /// RESET to SET, TE at the PD node.
    HybridCaseIII,
}

impl Topology {
    pub fn is_hybrid(self) -> bool {
        self != Topology::Bare3T
    }

    pub fn orientation(self) -> Option<Orientation> {
        match self {
            Topology::Bare3T => None,
            Topology::HybridCaseI | Topology::HybridCaseII => Some(Orientation::BeAtPd),
            Topology::HybridCaseIII => Some(Orientation::TeAtPd),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Bare3T => "bare",
            Topology::HybridCaseI => "case_i",
            Topology::HybridCaseII => "case_ii",
            Topology::HybridCaseIII => "case_iii",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bare" | "bare3t" => Some(Topology::Bare3T),
            "case_i" => Some(Topology::HybridCaseI),
            "case_ii" => Some(Topology::HybridCaseII),
            "case_iii" => Some(Topology::HybridCaseIII),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub level: f64,
}

/// Piecewise-constant selector gate voltage over the whole schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateWaveform {
    segments: Vec<GateSegment>,
}

impl GateWaveform {
    pub fn constant(level: f64, t_end: f64) -> Self {
        Self { segments: vec![GateSegment { t_start: 0.0, t_end, level }] }
    }

    pub fn segments(&self) -> &[GateSegment] {
        &self.segments
    }

    /// Gate level at `t`; the last segment is closed at its end.
    pub fn level_at(&self, t: f64) -> f64 {
        self.segment_index(t).map_or(0.0, |k| self.segments[k].level)
    }

    pub(crate) fn segment_index(&self, t: f64) -> Option<usize> {
        let n = self.segments.len();
        self.segments
            .iter()
            .position(|s| t >= s.t_start && t < s.t_end)
            .or_else(|| (n > 0 && t >= self.segments[n - 1].t_end).then_some(n - 1))
    }

    /// Interior segment boundaries, useful as integration breakpoints.
    pub fn boundaries(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.t_start)
    }

    pub fn validate(&self, t_end: f64) -> Result<()> {
        if self.segments.is_empty() {
            return Err(SimError::InvalidInput("gate waveform has no segments".into()));
        }
        let eps = 1e-15 + 1e-12 * t_end.abs();
        for (k, s) in self.segments.iter().enumerate() {
            ensure_finite("segment level", s.level)?;
            if !(s.t_end > s.t_start) {
                return Err(SimError::InvalidInput(format!("segment {k} has non-positive length")));
            }
            if !(0.0..=MAX_GATE_LEVEL).contains(&s.level) {
                return Err(SimError::InvalidInput(format!(
                    "segment {k} level {} V outside [0, {MAX_GATE_LEVEL}] V",
                    s.level
                )));
            }
            if k > 0 {
                let prev = self.segments[k - 1].t_end;
                if s.t_start < prev - eps {
                    return Err(SimError::InvalidInput(format!("segment {k} overlaps its predecessor")));
                }
                if s.t_start > prev + eps {
                    return Err(SimError::InvalidInput(format!("gap before segment {k}")));
                }
            }
        }
        if self.segments[0].t_start.abs() > eps {
            return Err(SimError::InvalidInput("gate waveform must start at t = 0".into()));
        }
        if self.segments[self.segments.len() - 1].t_end < t_end - eps {
            return Err(SimError::InvalidInput(format!("gate waveform ends before t = {t_end:e} s")));
        }
        Ok(())
    }
}

/// Constant gate waveform, or validated piecewise-constant segments.
pub fn build_vg_waveform(level: f64, ramp: Option<&[GateSegment]>, t_end: f64) -> Result<GateWaveform> {
    let wave = match ramp {
        None => GateWaveform::constant(level, t_end),
        Some(segments) => GateWaveform { segments: segments.to_vec() },
    };
    wave.validate(t_end)?;
    Ok(wave)
}

/// Exposure photocurrent, constant over the exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub i_exp: f64,
}

impl Stimulus {
    pub fn new(i_exp: f64) -> Self {
        Self { i_exp }
    }

    pub fn dark() -> Self {
        Self { i_exp: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("i_exp", self.i_exp)?;
        if self.i_exp < 0.0 {
            return Err(SimError::InvalidInput(format!("i_exp must be >= 0 (got {})", self.i_exp)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelConfig {
    pub topology: Topology,
    pub pd: PhotodiodeParams,
    pub oxram: Option<OxRamParams>,
    pub oxram_init: Option<OxRamState>,
    pub selector: MosfetParams,
    pub vg: GateWaveform,
    pub vs_level: f64,
    /// Seed for a single reset-noise sample on the initial VPD; `None` keeps runs deterministic.
    pub noise_seed: Option<u64>,
}

impl PixelConfig {
    pub fn bare() -> Self {
        let pd = PhotodiodeParams::default();
        Self {
            topology: Topology::Bare3T,
            pd,
            oxram: None,
            oxram_init: None,
            selector: MosfetParams::default(),
            vg: GateWaveform::constant(0.0, pd.t_end()),
            vs_level: 0.0,
            noise_seed: None,
        }
    }

    /// Hybrid pixel with the default device, gate level and initial state for the case.
    pub fn hybrid(topology: Topology) -> Result<Self> {
        Self::hybrid_with(topology, OxRamParams::default(), crate::calibrated::GATE_LEVEL)
    }

    pub fn hybrid_with(topology: Topology, oxram: OxRamParams, gate_level: f64) -> Result<Self> {
        let orientation = topology
            .orientation()
            .ok_or_else(|| SimError::Unsupported("hybrid constructor needs a hybrid topology".into()))?;
        let mut pd = PhotodiodeParams::default();
        if topology == Topology::HybridCaseII {
            pd.vrst = ELEVATED_VRST;
        }
        let init = match topology {
            Topology::HybridCaseI => state_from_resistance(R_SET_DEFAULT, READ_VOLTAGE, &oxram, orientation)?,
            Topology::HybridCaseII => state_from_resistance(R_SOFT_RESET_DEFAULT, READ_VOLTAGE, &oxram, orientation)?,
            _ => OxRamState::hard_reset(&oxram, orientation),
        };
        let config = Self {
            topology,
            pd,
            oxram: Some(oxram),
            oxram_init: Some(init),
            selector: MosfetParams::default(),
            vg: GateWaveform::constant(gate_level, pd.t_end()),
            vs_level: 0.0,
            noise_seed: None,
        };
        config.validate()?;
        Ok(config)
    }

    /// Same pixel with another reset level.
    pub fn with_vrst(mut self, vrst: f64) -> Self {
        self.pd.vrst = vrst;
        self
    }

    /// Total capacitance on the PD node.
    pub fn node_capacitance(&self) -> f64 {
        self.pd.c_pd + self.oxram.filter(|_| self.topology.is_hybrid()).map_or(0.0, |o| o.c_pox)
    }

    /// Reset-noise sigma on the node (V).
    pub fn reset_noise_volts(&self) -> f64 {
        self.pd.reset_noise_electrons * crate::device::ELEMENTARY_CHARGE / self.node_capacitance()
    }

    pub fn validate(&self) -> Result<()> {
        self.pd.validate()?;
        self.selector.validate()?;
        ensure_finite("vs_level", self.vs_level)?;
        self.vg.validate(self.pd.t_end())?;
        match self.topology.orientation() {
            None => Ok(()),
            Some(orientation) => {
                let oxram = self
                    .oxram
                    .as_ref()
                    .ok_or_else(|| SimError::InvalidInput("hybrid topology without OxRAM parameters".into()))?;
                oxram.validate()?;
                let init = self
                    .oxram_init
                    .as_ref()
                    .ok_or_else(|| SimError::InvalidInput("hybrid topology without initial OxRAM state".into()))?;
                init.validate(oxram)?;
                if init.orientation != orientation {
                    return Err(SimError::InvalidInput(format!(
                        "{} requires orientation {}",
                        self.topology.as_str(),
                        orientation.as_str()
                    )));
                }
                if self.topology == Topology::HybridCaseII && self.pd.vrst <= STANDARD_VRST {
                    return Err(SimError::InvalidInput(format!(
                        "case_ii requires an elevated reset level above {STANDARD_VRST} V (default {ELEVATED_VRST} V)"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Re-initialize the OxRAM to the state reading `target` ohm at [`READ_VOLTAGE`].
pub fn preprogram(config: &PixelConfig, target: f64) -> Result<PixelConfig> {
    let orientation = config
        .topology
        .orientation()
        .ok_or_else(|| SimError::Unsupported("the bare 3T pixel has no OxRAM to program".into()))?;
    let oxram = config
        .oxram
        .as_ref()
        .ok_or_else(|| SimError::InvalidInput("hybrid topology without OxRAM parameters".into()))?;
    let state = state_from_resistance(target, READ_VOLTAGE, oxram, orientation)?;
    let mut out = config.clone();
    out.oxram_init = Some(state);
    Ok(out)
}

/// Solved series point of the selector + OxRAM branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Branch current, positive when discharging the PD node (A).
    pub current: f64,
    /// Drop across the OxRAM, PD side minus selector side (V).
    pub v_device: f64,
    /// Voltage of the internal node (V).
    pub v_node: f64,
    /// Selector current at the solved node, for KCL checks (A).
    pub selector_current: f64,
}

/// Bisection on the internal node voltage. Selector current rises and OxRAM
/// current falls monotonically with the node voltage, so the root is unique.
pub fn series_operating_point(
    vpd: f64,
    gap: f64,
    vg: f64,
    vs: f64,
    oxram: &OxRamParams,
    selector: &MosfetParams,
) -> Result<OperatingPoint> {
    let balance = |vm: f64| {
        let i_sel = selector_current(vg - vs, vm - vs, selector);
        let i_dev = oxram.current_at(gap, vpd - vm);
        (i_sel - i_dev, i_sel, i_dev)
    };
    let (mut lo, mut hi) = if vpd >= vs { (vs, vpd) } else { (vpd, vs) };
    let (f_lo, _, _) = balance(lo);
    let (f_hi, _, _) = balance(hi);
    if !f_lo.is_finite() || !f_hi.is_finite() || f_lo > 0.0 || f_hi < 0.0 {
        return Err(SimError::OperatingPoint { vpd, lo, hi });
    }
    if f_lo == 0.0 {
        hi = lo;
    } else if f_hi == 0.0 {
        lo = hi;
    }
    let mut iterations = 0;
    while hi - lo > 2.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1e-3) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (f, _, _) = balance(mid);
        if !f.is_finite() {
            return Err(SimError::OperatingPoint { vpd, lo, hi });
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(SimError::OperatingPoint { vpd, lo, hi });
        }
    }
    let vm = 0.5 * (lo + hi);
    let (_, i_sel, i_dev) = balance(vm);
    Ok(OperatingPoint { current: i_dev, v_device: vpd - vm, v_node: vm, selector_current: i_sel })
}

/// Which schedule phase an evaluation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    Reset,
    Exposure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dvpd_dt: f64,
    pub dgap_dt: f64,
    pub i_ox: f64,
    pub v_device: f64,
    /// Set when the node sits on its floor (full well or 0 V) and discharge is suppressed.
    pub clamped: bool,
}

/// Right-hand side of the two-state system at time `t`.
pub fn assemble_derivative(vpd: f64, gap: f64, t: f64, config: &PixelConfig, stimulus: &Stimulus) -> Result<Derivative> {
    ensure_finite("vpd", vpd)?;
    ensure_finite("t", t)?;
    if t < 0.0 || t > config.pd.t_end() * (1.0 + 1e-12) {
        return Err(SimError::InvalidInput(format!("t = {t:e} s outside the schedule")));
    }
    let phase = if t < config.pd.trst { Phase::Reset } else { Phase::Exposure };
    evaluate(vpd, gap, phase, config.vg.level_at(t), config, stimulus.i_exp, config.pd.vrst)
}

#[inline]
pub(crate) fn evaluate(
    vpd: f64,
    gap: f64,
    phase: Phase,
    vg: f64,
    config: &PixelConfig,
    i_exp: f64,
    v_pinned: f64,
) -> Result<Derivative> {
    let node_v = match phase {
        Phase::Reset => v_pinned,
        Phase::Exposure => vpd,
    };
    let (i_ox, v_device, dgap_dt) = match (&config.oxram, &config.oxram_init) {
        (Some(oxram), Some(init)) if config.topology.is_hybrid() => {
            let gap = gap.clamp(oxram.gap_min, oxram.gap_max);
            let op = series_operating_point(node_v, gap, vg, config.vs_level, oxram, &config.selector)?;
            let dgap = oxram.velocity_at(gap, init.orientation, op.v_device);
            (op.current, op.v_device, dgap)
        }
        _ => (0.0, 0.0, 0.0),
    };
    let (dvpd_dt, clamped) = match phase {
        Phase::Reset => (0.0, false),
        Phase::Exposure => {
            let discharge = i_exp + i_ox;
            if discharge > 0.0 && vpd <= config.pd.floor() {
                (0.0, true)
            } else {
                (-discharge / config.node_capacitance(), false)
            }
        }
    };
    Ok(Derivative { dvpd_dt, dgap_dt, i_ox, v_device, clamped })
}
