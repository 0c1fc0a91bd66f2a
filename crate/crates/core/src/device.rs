//! Behavioral models for the three devices of the hybrid pixel: the OxRAM cell
//! (filament-gap conduction plus gap dynamics), the square-law NMOS used as
//! selector, and the photodiode.
//!
//! Sign convention: every OxRAM voltage is taken from the terminal facing the
//! photodiode node to the terminal facing the selector. The electrode
//! orientation decides whether a positive drop ruptures or regrows the
//! filament.
//!
//! Units: gap lengths in nm, voltages in V, currents in A, time in s.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result, SimError};

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Which OxRAM electrode is wired to the photodiode node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Bottom electrode at the PD node: a positive PD-side drop ruptures the filament.
    BeAtPd,
    /// Top electrode at the PD node: a positive PD-side drop grows the filament.
    TeAtPd,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::BeAtPd => "be_at_pd",
            Orientation::TeAtPd => "te_at_pd",
        }
    }
}

/// OxRAM constants.
///
/// Conduction is the sum of a filament path and an oxide path:
///
/// ```text
/// I_cf    = i0_cf * exp(-cf_decay * gap) * sinh(cf_field * v)
/// I_oxide = i0_ox * exp(-ox_decay * gap) * sinh(ox_field * vgap)
/// ```
///
/// with `vgap = v * gap / gap_max`. Gap dynamics follow a two-branch sinh
/// rate law, `rupture_rate * sinh(|v| / rupture_field)` when opening and
/// `-growth_rate * sinh(|v| / growth_field)` when closing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OxRamParams {
    /// Switching-layer thickness (nm).
    pub oxide_thickness: f64,
    /// Smallest ruptured length, fully formed filament (nm).
    pub gap_min: f64,
    /// Largest ruptured length, hard RESET (nm).
    pub gap_max: f64,
    /// Filament-path decay constant `a` (1/nm).
    pub cf_decay: f64,
    /// Filament-path field constant `b` (1/V).
    pub cf_field: f64,
    /// Oxide-path decay constant `c` (1/nm).
    pub ox_decay: f64,
    /// Oxide-path field constant `d` (1/V).
    pub ox_field: f64,
    /// Filament-path current prefactor (A).
    pub i0_cf: f64,
    /// Oxide-path current prefactor (A).
    pub i0_ox: f64,
    /// Filament regrowth velocity prefactor (nm/s).
    pub growth_rate: f64,
    /// Filament rupture velocity prefactor (nm/s).
    pub rupture_rate: f64,
    /// Regrowth field scale (V).
    pub growth_field: f64,
    /// Rupture field scale (V).
    pub rupture_field: f64,
    /// Parasitic MIM capacitance added to the PD node (F).
    pub c_pox: f64,
}

impl Default for OxRamParams {
    /// Parameters produced by [`crate::experiments::calibrate`] against the
    /// default anchors with seed 0, frozen here so that simulations do not
    /// have to recalibrate on start-up.
    fn default() -> Self {
        crate::calibrated::DEVICE
    }
}

impl OxRamParams {
    pub fn gap_span(&self) -> f64 {
        self.gap_max - self.gap_min
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("oxide_thickness", self.oxide_thickness),
            ("gap_min", self.gap_min),
            ("gap_max", self.gap_max),
            ("cf_decay", self.cf_decay),
            ("cf_field", self.cf_field),
            ("ox_decay", self.ox_decay),
            ("ox_field", self.ox_field),
            ("i0_cf", self.i0_cf),
            ("i0_ox", self.i0_ox),
            ("growth_rate", self.growth_rate),
            ("rupture_rate", self.rupture_rate),
            ("growth_field", self.growth_field),
            ("rupture_field", self.rupture_field),
            ("c_pox", self.c_pox),
        ];
        for (name, value) in fields {
            ensure_finite(name, value)?;
        }
        if !(0.0 <= self.gap_min && self.gap_min < self.gap_max && self.gap_max <= self.oxide_thickness) {
            return Err(SimError::InvalidInput(format!(
                "gap bounds must satisfy 0 <= gap_min < gap_max <= oxide_thickness (got {}, {}, {})",
                self.gap_min, self.gap_max, self.oxide_thickness
            )));
        }
        let positive = [
            ("cf_decay", self.cf_decay),
            ("cf_field", self.cf_field),
            ("ox_decay", self.ox_decay),
            ("ox_field", self.ox_field),
            ("i0_cf", self.i0_cf),
            ("i0_ox", self.i0_ox),
            ("growth_rate", self.growth_rate),
            ("rupture_rate", self.rupture_rate),
            ("growth_field", self.growth_field),
            ("rupture_field", self.rupture_field),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(SimError::InvalidInput(format!("{name} must be > 0 (got {value})")));
            }
        }
        if self.c_pox < 0.0 {
            return Err(SimError::InvalidInput(format!("c_pox must be >= 0 (got {})", self.c_pox)));
        }
        Ok(())
    }

    /// Filament plus oxide current for an explicit `vgap`. No validation; hot path.
    #[inline]
    pub(crate) fn conduction(&self, gap: f64, v: f64, vgap: f64) -> f64 {
        let i_cf = self.i0_cf * (-self.cf_decay * gap).exp() * (self.cf_field * v).sinh();
        let i_ox = self.i0_ox * (-self.ox_decay * gap).exp() * (self.ox_field * vgap).sinh();
        i_cf + i_ox
    }

    /// Voltage across the ruptured region for a total device drop `v`.
    #[inline]
    pub(crate) fn gap_voltage(&self, gap: f64, v: f64) -> f64 {
        v * gap / self.gap_max
    }

    #[inline]
    pub(crate) fn current_at(&self, gap: f64, v: f64) -> f64 {
        self.conduction(gap, v, self.gap_voltage(gap, v))
    }

    #[inline]
    pub(crate) fn velocity_at(&self, gap: f64, orientation: Orientation, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        let rupturing = match orientation {
            Orientation::BeAtPd => v > 0.0,
            Orientation::TeAtPd => v < 0.0,
        };
        let mag = v.abs();
        if rupturing {
            if gap >= self.gap_max {
                0.0
            } else {
                self.rupture_rate * (mag / self.rupture_field).sinh()
            }
        } else if gap <= self.gap_min {
            0.0
        } else {
            -self.growth_rate * (mag / self.growth_field).sinh()
        }
    }
}

/// Mutable OxRAM state: ruptured length and wiring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OxRamState {
    /// Length of the ruptured filament region (nm).
    pub gap: f64,
    pub orientation: Orientation,
}

impl OxRamState {
    pub fn new(gap: f64, orientation: Orientation) -> Self {
        Self { gap, orientation }
    }

    pub fn fully_set(params: &OxRamParams, orientation: Orientation) -> Self {
        Self::new(params.gap_min, orientation)
    }

    pub fn hard_reset(params: &OxRamParams, orientation: Orientation) -> Self {
        Self::new(params.gap_max, orientation)
    }

    pub fn validate(&self, params: &OxRamParams) -> Result<()> {
        ensure_finite("gap", self.gap)?;
        if self.gap < params.gap_min || self.gap > params.gap_max {
            return Err(SimError::InvalidInput(format!(
                "gap {} nm outside [{}, {}] nm",
                self.gap, params.gap_min, params.gap_max
            )));
        }
        Ok(())
    }
}

/// OxRAM current for an applied drop and an explicit ruptured-region drop.
/// Odd in the applied voltage at fixed `vgap = v * gap / gap_max`.
pub fn oxram_current(state: &OxRamState, v_applied: f64, vgap: f64, params: &OxRamParams) -> Result<f64> {
    ensure_finite("v_applied", v_applied)?;
    ensure_finite("vgap", vgap)?;
    ensure_finite("gap", state.gap)?;
    let i = params.conduction(state.gap, v_applied, vgap);
    ensure_finite("oxram current", i)?;
    Ok(i)
}

/// OxRAM current with the ruptured-region drop taken from the linear divider.
pub fn device_current(state: &OxRamState, v: f64, params: &OxRamParams) -> Result<f64> {
    oxram_current(state, v, params.gap_voltage(state.gap, v), params)
}

/// Rate of change of the ruptured length (nm/s) for the PD-side drop `v_device`.
pub fn gap_velocity(state: &OxRamState, v_device: f64, params: &OxRamParams) -> Result<f64> {
    ensure_finite("v_device", v_device)?;
    ensure_finite("gap", state.gap)?;
    Ok(params.velocity_at(state.gap, state.orientation, v_device))
}

/// Static read resistance `vread / I(vread)`.
pub fn read_resistance(state: &OxRamState, vread: f64, params: &OxRamParams) -> Result<f64> {
    ensure_finite("vread", vread)?;
    if vread == 0.0 {
        return Err(SimError::InvalidInput("vread must be non-zero".into()));
    }
    let i = device_current(state, vread, params)?;
    if i == 0.0 {
        return Err(SimError::InvalidInput("zero read current".into()));
    }
    Ok(vread / i)
}

/// Gap whose read resistance matches `r_target`, found by bisection on the
/// (strictly increasing) log read resistance.
pub fn state_from_resistance(
    r_target: f64,
    vread: f64,
    params: &OxRamParams,
    orientation: Orientation,
) -> Result<OxRamState> {
    ensure_finite("r_target", r_target)?;
    let r_of = |gap: f64| read_resistance(&OxRamState::new(gap, orientation), vread, params);
    let low = r_of(params.gap_min)?;
    let high = r_of(params.gap_max)?;
    if !(r_target > 0.0) || r_target < low * (1.0 - 1e-12) || r_target > high * (1.0 + 1e-12) {
        return Err(SimError::OutOfRange { target: r_target, low, high });
    }
    let target = r_target.ln();
    let (mut lo, mut hi) = (params.gap_min, params.gap_max);
    if (low.ln() - target).abs() < 1e-12 {
        return Ok(OxRamState::new(lo, orientation));
    }
    if (high.ln() - target).abs() < 1e-12 {
        return Ok(OxRamState::new(hi, orientation));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if r_of(mid)?.ln() < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * params.gap_max {
            break;
        }
    }
    Ok(OxRamState::new(0.5 * (lo + hi), orientation))
}

/// Square-law NMOS constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosfetParams {
    /// Threshold voltage (V).
    pub vth: f64,
    /// Transconductance factor k' * W / L (A/V^2).
    pub kprime: f64,
    /// Channel-length modulation (1/V).
    pub lambda: f64,
}

impl Default for MosfetParams {
    fn default() -> Self {
        Self { vth: 0.45, kprime: 400e-6, lambda: 0.0 }
    }
}

impl MosfetParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("vth", self.vth)?;
        ensure_finite("kprime", self.kprime)?;
        ensure_finite("lambda", self.lambda)?;
        if self.vth <= 0.0 || self.kprime <= 0.0 || self.lambda < 0.0 {
            return Err(SimError::InvalidInput(format!(
                "selector requires vth > 0, kprime > 0, lambda >= 0 (got {}, {}, {})",
                self.vth, self.kprime, self.lambda
            )));
        }
        Ok(())
    }
}

/// Drain current of the square-law selector. Subthreshold conduction is zero;
/// negative `vds` is handled by swapping drain and source.
pub fn selector_current(vgs: f64, vds: f64, params: &MosfetParams) -> f64 {
    if vds < 0.0 {
        return -selector_current(vgs - vds, -vds, params);
    }
    let overdrive = vgs - params.vth;
    if overdrive <= 0.0 || vds == 0.0 {
        return 0.0;
    }
    let clm = 1.0 + params.lambda * vds;
    if vds < overdrive {
        params.kprime * (overdrive * vds - 0.5 * vds * vds) * clm
    } else {
        0.5 * params.kprime * overdrive * overdrive * clm
    }
}

/// Photodiode and timing constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotodiodeParams {
    /// PD capacitance (F).
    pub c_pd: f64,
    /// Reset level (V).
    pub vrst: f64,
    /// Full-well capacity (electrons).
    pub fwc_electrons: f64,
    /// Reset noise (electrons rms).
    pub reset_noise_electrons: f64,
    /// Exposure duration (s).
    pub texp: f64,
    /// Reset duration before exposure (s).
    pub trst: f64,
}

impl Default for PhotodiodeParams {
    fn default() -> Self {
        Self {
            c_pd: 10e-15,
            vrst: 1.42,
            fwc_electrons: 62_500.0,
            reset_noise_electrons: 28.0,
            texp: 9.5e-6,
            trst: 0.5e-6,
        }
    }
}

impl PhotodiodeParams {
    /// Largest voltage drop the well can hold.
    pub fn fwc_swing(&self) -> f64 {
        self.fwc_electrons * ELEMENTARY_CHARGE / self.c_pd
    }

    /// Lowest reachable PD voltage: full well or 0 V, whichever comes first.
    pub fn floor(&self) -> f64 {
        (self.vrst - self.fwc_swing()).max(0.0)
    }

    /// Reset-noise sigma on the PD capacitance (V).
    pub fn reset_noise_volts(&self) -> f64 {
        self.reset_noise_electrons * ELEMENTARY_CHARGE / self.c_pd
    }

    pub fn t_end(&self) -> f64 {
        self.trst + self.texp
    }

    /// Closed-form drop-only response of a bare pixel, clamped at the floor.
    pub fn ideal_final_vpd(&self, i_exp: f64) -> f64 {
        (self.vrst - i_exp * self.texp / self.c_pd).max(self.floor())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("c_pd", self.c_pd),
            ("vrst", self.vrst),
            ("fwc_electrons", self.fwc_electrons),
            ("reset_noise_electrons", self.reset_noise_electrons),
            ("texp", self.texp),
            ("trst", self.trst),
        ] {
            ensure_finite(name, value)?;
        }
        if self.c_pd <= 0.0 || self.vrst <= 0.0 || self.fwc_electrons <= 0.0 || self.texp <= 0.0 || self.trst < 0.0 {
            return Err(SimError::InvalidInput(
                "photodiode requires c_pd, vrst, fwc_electrons, texp > 0 and trst >= 0".into(),
            ));
        }
        if self.reset_noise_electrons < 0.0 {
            return Err(SimError::InvalidInput("reset_noise_electrons must be >= 0".into()));
        }
        Ok(())
    }
}
