//! Fit of the OxRAM constants to the switching anchors of the calibrated cell,
//! followed by the pixel-level gate and readout thresholds.
//!
//! The device stage is a bounded Hooke-Jeeves pattern search over eight
//! log-parameters with a weak pull towards the starting point, restarted from
//! seeded random perturbations. Only four anchor quantities exist, so the pull
//! is what pins the remaining directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::{with_workers, SweepTable};
use super::window::{operating_dr, readable_window_bounds, ReadableWindow};
use crate::device::{MosfetParams, Orientation, OxRamParams};
use crate::error::{ensure_finite, Result, SimError};
use crate::pixel::{preprogram, GateWaveform, PixelConfig, Stimulus, Topology, READ_VOLTAGE, R_SET_DEFAULT, STANDARD_VRST};
use crate::solver::{integrate, SolverOptions};

/// Gap of the nominal SET state as a fraction of the span above `gap_min`.
pub const SET_GAP_FRACTION: f64 = 0.06;

const N_PARAMS: usize = 8;
const PARAM_NAMES: [&str; N_PARAMS] =
    ["i0_cf", "cf_decay", "cf_field", "i0_ox", "ox_decay", "ox_field", "rupture_rate", "rupture_field"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnchorQuantity {
    /// Read resistance of the SET state (ohm).
    RSet,
    /// Read resistance of the hard-RESET state (ohm).
    RReset,
    /// Peak current of a direct RESET pulse from the SET state (A).
    IReset,
    /// Time for a direct RESET pulse to open the gap fully (s).
    TReset,
}

impl AnchorQuantity {
    pub fn as_str(self) -> &'static str {
        match self {
            AnchorQuantity::RSet => "r_set",
            AnchorQuantity::RReset => "r_reset",
            AnchorQuantity::IReset => "i_reset",
            AnchorQuantity::TReset => "t_reset",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [AnchorQuantity::RSet, AnchorQuantity::RReset, AnchorQuantity::IReset, AnchorQuantity::TReset]
            .into_iter()
            .find(|q| q.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub quantity: AnchorQuantity,
    pub value: f64,
    /// Relative tolerance.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationAnchors {
    pub anchors: Vec<Anchor>,
    /// Read bias of the resistance anchors (V).
    pub read_voltage: f64,
    /// Drive of the RESET-pulse anchors (V).
    pub reset_voltage: f64,
    pub set_gap_fraction: f64,
}

impl Default for CalibrationAnchors {
    fn default() -> Self {
        Self {
            anchors: vec![
                Anchor { quantity: AnchorQuantity::RSet, value: 1.25e6, tolerance: 0.2 },
                Anchor { quantity: AnchorQuantity::RReset, value: 60e9, tolerance: 0.2 },
                Anchor { quantity: AnchorQuantity::IReset, value: 11e-6, tolerance: 0.2 },
                Anchor { quantity: AnchorQuantity::TReset, value: 510e-9, tolerance: 0.1 },
            ],
            read_voltage: READ_VOLTAGE,
            reset_voltage: STANDARD_VRST,
            set_gap_fraction: SET_GAP_FRACTION,
        }
    }
}

impl CalibrationAnchors {
    pub fn validate(&self) -> Result<()> {
        if self.anchors.is_empty() {
            return Err(SimError::InvalidInput("calibration needs at least one anchor".into()));
        }
        for a in &self.anchors {
            ensure_finite(a.quantity.as_str(), a.value)?;
            if !(a.value > 0.0 && a.tolerance > 0.0 && a.tolerance.is_finite()) {
                return Err(SimError::InvalidInput(format!(
                    "anchor {} needs a positive value and tolerance",
                    a.quantity.as_str()
                )));
            }
        }
        if !(self.read_voltage > 0.0 && self.reset_voltage > 0.0) {
            return Err(SimError::InvalidInput("anchor voltages must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.set_gap_fraction) {
            return Err(SimError::InvalidInput("set_gap_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn value(&self, quantity: AnchorQuantity) -> Option<f64> {
        self.anchors.iter().find(|a| a.quantity == quantity).map(|a| a.value)
    }

    /// Stable text form used to key cached calibrations.
    pub fn fingerprint(&self) -> String {
        let mut s = format!(
            "read={:e};reset={:e};set_fraction={:e}",
            self.read_voltage, self.reset_voltage, self.set_gap_fraction
        );
        for a in &self.anchors {
            s.push_str(&format!(";{}={:e}+-{:e}", a.quantity.as_str(), a.value, a.tolerance));
        }
        s
    }
}

/// Gap of the nominal SET state.
pub fn set_gap(params: &OxRamParams, set_gap_fraction: f64) -> f64 {
    params.gap_min + set_gap_fraction * params.gap_span()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectReset {
    /// Time to reach `gap_max` (s).
    pub t_reset: f64,
    /// Largest device current along the way (A).
    pub i_peak: f64,
}

/// Constant-voltage RESET pulse applied straight across the cell from `gap0`.
/// The rupture velocity does not depend on the gap, so the trajectory is linear.
pub fn direct_reset(params: &OxRamParams, v: f64, gap0: f64) -> Result<DirectReset> {
    ensure_finite("v", v)?;
    let velocity = params.velocity_at(gap0, Orientation::BeAtPd, v);
    if !(v > 0.0 && velocity > 0.0) {
        return Err(SimError::InvalidInput(format!("no rupture at {v} V from gap {gap0} nm")));
    }
    let t_reset = (params.gap_max - gap0) / velocity;
    const N: usize = 256;
    let i_peak = (0..=N)
        .map(|k| params.current_at(gap0 + (params.gap_max - gap0) * k as f64 / N as f64, v))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DirectReset { t_reset, i_peak })
}

/// Model value of one anchor quantity.
pub fn anchor_model(params: &OxRamParams, anchors: &CalibrationAnchors, quantity: AnchorQuantity) -> Result<f64> {
    let gs = set_gap(params, anchors.set_gap_fraction);
    let read = |gap: f64| anchors.read_voltage / params.current_at(gap, anchors.read_voltage);
    let value = match quantity {
        AnchorQuantity::RSet => read(gs),
        AnchorQuantity::RReset => read(params.gap_max),
        AnchorQuantity::IReset => direct_reset(params, anchors.reset_voltage, gs)?.i_peak,
        AnchorQuantity::TReset => direct_reset(params, anchors.reset_voltage, gs)?.t_reset,
    };
    ensure_finite(quantity.as_str(), value)?;
    Ok(value)
}

/// Closed-form starting point: the structural constants `a`, `c`, `d`, `v1`
/// and the gap range come from `structure`; the prefactors, the filament
/// field constant and the rupture rate are solved from the anchors present.
pub fn initial_guess(anchors: &CalibrationAnchors, structure: &OxRamParams) -> Result<OxRamParams> {
    anchors.validate()?;
    let mut p = *structure;
    let vr = anchors.read_voltage;
    let gs = set_gap(&p, anchors.set_gap_fraction);
    let ox = |p: &OxRamParams, g: f64, v: f64| (-p.ox_decay * g).exp() * (p.ox_field * p.gap_voltage(g, v)).sinh();
    if let Some(r) = anchors.value(AnchorQuantity::RReset) {
        p.i0_ox = (vr / r) / ox(&p, p.gap_max, vr);
    }
    if let (Some(i_reset), Some(r_set)) = (anchors.value(AnchorQuantity::IReset), anchors.value(AnchorQuantity::RSet)) {
        let ratio = i_reset * r_set / vr;
        let mut b = p.cf_field;
        for _ in 0..100 {
            let r = (anchors.reset_voltage * b).sinh() / (vr * b).sinh();
            b *= (ratio / r).powf(0.2);
        }
        if b.is_finite() && b > 0.0 {
            p.cf_field = b;
        }
    }
    if let Some(r_set) = anchors.value(AnchorQuantity::RSet) {
        let i_cf = vr / r_set - p.i0_ox * ox(&p, gs, vr);
        if i_cf > 0.0 {
            p.i0_cf = i_cf / ((-p.cf_decay * gs).exp() * (p.cf_field * vr).sinh());
        }
    }
    if let Some(t) = anchors.value(AnchorQuantity::TReset) {
        p.rupture_rate = (p.gap_max - gs) / (t * (anchors.reset_voltage / p.rupture_field).sinh());
    }
    tie_growth(&mut p);
    p.validate()?;
    Ok(p)
}

fn tie_growth(p: &mut OxRamParams) {
    p.growth_rate = p.rupture_rate;
    p.growth_field = p.rupture_field;
}

fn to_vector(p: &OxRamParams) -> [f64; N_PARAMS] {
    [p.i0_cf, p.cf_decay, p.cf_field, p.i0_ox, p.ox_decay, p.ox_field, p.rupture_rate, p.rupture_field].map(f64::ln)
}

fn from_vector(base: &OxRamParams, x: &[f64; N_PARAMS]) -> OxRamParams {
    let e = x.map(f64::exp);
    let mut p = OxRamParams {
        i0_cf: e[0],
        cf_decay: e[1],
        cf_field: e[2],
        i0_ox: e[3],
        ox_decay: e[4],
        ox_field: e[5],
        rupture_rate: e[6],
        rupture_field: e[7],
        ..*base
    };
    tie_growth(&mut p);
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Random restarts in addition to the start at the initial guess.
    pub restarts: usize,
    pub seed: u64,
    /// Weight of the quadratic pull towards the initial log-parameters.
    pub regularization: f64,
    /// Half-width of the search box around the initial guess, in natural-log units.
    pub log_bound: f64,
    /// Half-width of the random restart perturbation, in natural-log units.
    pub restart_spread: f64,
    pub max_evaluations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { restarts: 8, seed: 0, regularization: 1e-4, log_bound: 3.0, restart_spread: 0.7, max_evaluations: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub quantity: AnchorQuantity,
    pub target: f64,
    pub model: f64,
    /// `(model - target) / target`.
    pub relative_error: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: OxRamParams,
    /// Selector constants; not fitted by the device anchors.
    pub selector: MosfetParams,
    pub residuals: Vec<Residual>,
    pub objective: f64,
    pub converged: bool,
    pub under_determined: bool,
    pub best_restart: usize,
    pub evaluations: usize,
    pub detail: String,
}

pub fn residuals(params: &OxRamParams, anchors: &CalibrationAnchors) -> Result<Vec<Residual>> {
    anchors
        .anchors
        .iter()
        .map(|a| {
            let model = anchor_model(params, anchors, a.quantity)?;
            let relative_error = (model - a.value) / a.value;
            Ok(Residual {
                quantity: a.quantity,
                target: a.value,
                model,
                relative_error,
                tolerance: a.tolerance,
                within_tolerance: relative_error.abs() <= a.tolerance,
            })
        })
        .collect()
}

struct Problem<'a> {
    anchors: &'a CalibrationAnchors,
    base: OxRamParams,
    x0: [f64; N_PARAMS],
    options: CalibrationOptions,
}

impl Problem<'_> {
    fn objective(&self, x: &[f64; N_PARAMS]) -> f64 {
        let p = from_vector(&self.base, x);
        let mut total = 0.0;
        for a in &self.anchors.anchors {
            match anchor_model(&p, self.anchors, a.quantity) {
                Ok(m) => {
                    let r = (m - a.value) / (a.tolerance * a.value);
                    total += r * r;
                }
                Err(_) => return f64::INFINITY,
            }
        }
        let pull: f64 = x.iter().zip(&self.x0).map(|(a, b)| (a - b) * (a - b)).sum();
        total += self.options.regularization * pull;
        // Read resistance must rise with the gap for the state mapping to exist.
        const N: usize = 32;
        let v = self.anchors.read_voltage;
        let mut prev = f64::INFINITY;
        let mut violations = 0;
        for k in 0..=N {
            let g = p.gap_min + p.gap_span() * k as f64 / N as f64;
            let i = p.current_at(g, v);
            if !(i < prev) {
                violations += 1;
            }
            prev = i;
        }
        total += 1e3 * violations as f64;
        if total.is_finite() {
            total
        } else {
            f64::INFINITY
        }
    }

    fn clamp(&self, x: &mut [f64; N_PARAMS]) {
        for (xi, x0) in x.iter_mut().zip(&self.x0) {
            *xi = xi.clamp(x0 - self.options.log_bound, x0 + self.options.log_bound);
        }
    }

    /// Hooke-Jeeves pattern search from `start`.
    fn search(&self, start: [f64; N_PARAMS]) -> ([f64; N_PARAMS], f64, usize) {
        let mut evals = 0usize;
        let mut f = |x: &[f64; N_PARAMS], evals: &mut usize| {
            *evals += 1;
            self.objective(x)
        };
        let mut base = start;
        self.clamp(&mut base);
        let mut f_base = f(&base, &mut evals);
        let mut step = 0.25;
        while step > 1e-7 && evals < self.options.max_evaluations {
            let (trial, f_trial) = self.explore(base, f_base, step, &mut f, &mut evals);
            if f_trial < f_base {
                // Pattern moves while they keep paying off.
                let (mut prev, mut cur, mut f_cur) = (base, trial, f_trial);
                loop {
                    let mut jump = [0.0; N_PARAMS];
                    for k in 0..N_PARAMS {
                        jump[k] = 2.0 * cur[k] - prev[k];
                    }
                    self.clamp(&mut jump);
                    let f_jump = f(&jump, &mut evals);
                    let (next, f_next) = self.explore(jump, f_jump, step, &mut f, &mut evals);
                    if f_next < f_cur && evals < self.options.max_evaluations {
                        prev = cur;
                        cur = next;
                        f_cur = f_next;
                    } else {
                        break;
                    }
                }
                base = cur;
                f_base = f_cur;
            } else {
                step *= 0.5;
            }
        }
        (base, f_base, evals)
    }

    fn explore(
        &self,
        mut x: [f64; N_PARAMS],
        mut fx: f64,
        step: f64,
        f: &mut impl FnMut(&[f64; N_PARAMS], &mut usize) -> f64,
        evals: &mut usize,
    ) -> ([f64; N_PARAMS], f64) {
        for k in 0..N_PARAMS {
            for dir in [1.0, -1.0] {
                let mut y = x;
                y[k] += dir * step;
                self.clamp(&mut y);
                if y[k] == x[k] {
                    continue;
                }
                let fy = f(&y, evals);
                if fy < fx {
                    x = y;
                    fx = fy;
                    break;
                }
            }
        }
        (x, fx)
    }
}

/// Multi-start bounded fit of the device constants. Restart 0 starts at
/// `initial`; restarts `1..=options.restarts` start from seeded perturbations.
pub fn calibrate(
    anchors: &CalibrationAnchors,
    initial: &OxRamParams,
    options: &CalibrationOptions,
) -> Result<CalibrationResult> {
    anchors.validate()?;
    initial.validate()?;
    if !(options.log_bound > 0.0 && options.restart_spread >= 0.0 && options.regularization >= 0.0) {
        return Err(SimError::InvalidInput("calibration needs log_bound > 0 and non-negative spread and weight".into()));
    }
    let problem = Problem { anchors, base: *initial, x0: to_vector(initial), options: *options };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut starts = vec![problem.x0];
    for _ in 0..options.restarts {
        let mut x = problem.x0;
        for xi in &mut x {
            *xi += rng.random_range(-1.0..=1.0) * options.restart_spread;
        }
        starts.push(x);
    }
    let runs: Vec<([f64; N_PARAMS], f64, usize)> =
        with_workers(|| starts.par_iter().map(|s| problem.search(*s)).collect());
    let evaluations = runs.iter().map(|r| r.2).sum();
    let (best_restart, (x, objective, _)) = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.1.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| SimError::Calibration("objective non-finite at every start".into()))?;
    let params = from_vector(initial, x);
    params.validate()?;
    let residuals = residuals(&params, anchors)?;
    let converged = residuals.iter().all(|r| r.within_tolerance);

    let mut quantities: Vec<&str> = anchors.anchors.iter().map(|a| a.quantity.as_str()).collect();
    quantities.sort_unstable();
    quantities.dedup();
    let under_determined = quantities.len() < 4;
    let mut detail = format!(
        "best of {} starts (restart {best_restart}), objective {objective:.6e}, {evaluations} evaluations",
        starts.len()
    );
    if under_determined {
        detail.push_str(&format!(
            "; under-determined: {} of 4 anchor quantities for {N_PARAMS} parameters ({}), remaining directions set by the starting point",
            quantities.len(),
            PARAM_NAMES.join(", ")
        ));
    }
    for r in residuals.iter().filter(|r| !r.within_tolerance) {
        detail.push_str(&format!(
            "; {} off by {:+.2}% (tolerance {:.0}%)",
            r.quantity.as_str(),
            100.0 * r.relative_error,
            100.0 * r.tolerance
        ));
    }
    Ok(CalibrationResult {
        params,
        selector: MosfetParams::default(),
        residuals,
        objective: *objective,
        converged,
        under_determined,
        best_restart,
        evaluations,
        detail,
    })
}

/// Bracket and target of the gate-level stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTarget {
    /// Dark final VPD of the SET-to-RESET pixel (V).
    pub dark_vpd: f64,
    pub lo: f64,
    pub hi: f64,
    /// Points of the coarse scan over `[lo, hi]`.
    pub scan_points: usize,
    /// Bracket width at which bisection stops (V).
    pub tolerance: f64,
}

impl Default for GateTarget {
    fn default() -> Self {
        Self { dark_vpd: 1.17, lo: 0.451, hi: 1.5, scan_points: 43, tolerance: 1e-9 }
    }
}

/// Dark final VPD of `config` with its gate held at `gate_level`.
pub fn dark_level(config: &PixelConfig, gate_level: f64, options: &SolverOptions) -> Result<f64> {
    let mut c = config.clone();
    c.vg = GateWaveform::constant(gate_level, c.pd.t_end());
    Ok(integrate(&c, &Stimulus::dark(), options)?.final_vpd)
}

/// Gate level at which the SET-to-RESET pixel `case_i` settles at the target
/// dark level. Just above threshold the dark level is not monotone in the
/// gate, so a coarse scan picks the highest upward crossing before bisecting it.
pub fn calibrate_gate_level(case_i: &PixelConfig, target: &GateTarget, options: &SolverOptions) -> Result<f64> {
    let f = |vg: f64| -> Result<f64> { Ok(dark_level(case_i, vg, options)? - target.dark_vpd) };
    let n = target.scan_points.max(2);
    let grid: Vec<f64> = (0..n).map(|k| target.lo + (target.hi - target.lo) * k as f64 / (n - 1) as f64).collect();
    let values = with_workers(|| grid.par_iter().map(|&vg| f(vg)).collect::<Result<Vec<f64>>>())?;
    let k = (0..n - 1).rev().find(|&k| values[k] < 0.0 && values[k + 1] >= 0.0).ok_or_else(|| {
        SimError::Calibration(format!(
            "dark level {} V not crossed on gate levels [{}, {}] V",
            target.dark_vpd, target.lo, target.hi
        ))
    })?;
    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
    for _ in 0..200 {
        if hi - lo <= target.tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest readable swing at which the bare-pixel sweep spans `target_db`.
pub fn calibrate_min_detect(bare: &SweepTable, target_db: f64, max_swing: f64, dark_sigmas: f64) -> Result<f64> {
    let dr = |min_detect: f64| -> Result<Option<f64>> {
        let w = ReadableWindow { min_detect, max_swing, dark_sigmas };
        readable_window_bounds(bare, &w)?.span().map(|(a, b)| operating_dr(a, b)).transpose()
    };
    let (mut lo, mut hi) = (1e-6 * max_swing, max_swing * (1.0 - 1e-9));
    match (dr(lo)?, dr(hi)?) {
        (Some(a), b) if a >= target_db && b.is_none_or(|b| b <= target_db) => {}
        _ => {
            return Err(SimError::Calibration(format!("bare sweep cannot reach a {target_db} dB window")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match dr(mid)? {
            Some(d) if d > target_db => lo = mid,
            _ => hi = mid,
        }
        if hi - lo <= 1e-12 * max_swing {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelCalibration {
    pub device: CalibrationResult,
    pub gate_level: f64,
    pub min_detect: f64,
}

/// Targets of the pixel-level stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelTargets {
    pub gate: GateTarget,
    /// Operating DR the bare pixel should span (dB).
    pub bare_dr_db: f64,
    pub max_swing: f64,
    pub dark_sigmas: f64,
    pub points_per_decade: usize,
}

impl Default for PixelTargets {
    fn default() -> Self {
        Self { gate: GateTarget::default(), bare_dr_db: 20.0, max_swing: 0.85, dark_sigmas: 1.0, points_per_decade: 12 }
    }
}

/// Device fit, then the gate level, then the lower readable swing. The
/// photodiode, selector and timing come from `bare` and `case_i`; the
/// fitted device replaces the OxRAM of `case_i` at its default SET level.
pub fn calibrate_pixel(
    anchors: &CalibrationAnchors,
    initial: &OxRamParams,
    options: &CalibrationOptions,
    targets: &PixelTargets,
    solver: &SolverOptions,
    bare: &PixelConfig,
    case_i: &PixelConfig,
) -> Result<PixelCalibration> {
    if case_i.topology != Topology::HybridCaseI || bare.topology != Topology::Bare3T {
        return Err(SimError::InvalidInput("pixel calibration needs a bare and a case_i template".into()));
    }
    let device = calibrate(anchors, initial, options)?;
    let mut template = case_i.clone();
    template.oxram = Some(device.params);
    let template = preprogram(&template, R_SET_DEFAULT)?;
    let gate_level = calibrate_gate_level(&template, &targets.gate, solver)?;
    let spec = super::sweep::SweepSpec {
        points_per_decade: targets.points_per_decade,
        options: *solver,
        ..super::sweep::SweepSpec::new(bare.clone())
    };
    let bare_table = super::sweep::run_sweep(&spec)?;
    let min_detect = calibrate_min_detect(&bare_table, targets.bare_dr_db, targets.max_swing, targets.dark_sigmas)?;
    Ok(PixelCalibration { device, gate_level, min_detect })
}

/// Structural constants of the default device before fitting.
pub fn structural_prior() -> OxRamParams {
    OxRamParams {
        oxide_thickness: 10.0,
        gap_min: 0.1,
        gap_max: 1.7,
        cf_decay: 60.0,
        cf_field: 3.0,
        ox_decay: 8.0,
        ox_field: 1.5,
        i0_cf: 1e-4,
        i0_ox: 1e-9,
        growth_rate: 1.0,
        rupture_rate: 1.0,
        growth_field: 0.3,
        rupture_field: 0.3,
        c_pox: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CalibrationOptions {
        CalibrationOptions { restarts: 2, max_evaluations: 4000, ..CalibrationOptions::default() }
    }

    #[test]
    fn direct_reset_is_linear_in_gap() {
        let p = crate::calibrated::DEVICE;
        let gs = set_gap(&p, SET_GAP_FRACTION);
        let r = direct_reset(&p, 1.42, gs).unwrap();
        let v = p.rupture_rate * (1.42 / p.rupture_field).sinh();
        assert!((r.t_reset - (p.gap_max - gs) / v).abs() < 1e-18);
        assert!(r.i_peak >= p.current_at(gs, 1.42));
        assert!(direct_reset(&p, -1.0, gs).is_err());
    }

    #[test]
    fn initial_guess_hits_closed_form_anchors() {
        let anchors = CalibrationAnchors::default();
        let p = initial_guess(&anchors, &structural_prior()).unwrap();
        for q in [AnchorQuantity::RSet, AnchorQuantity::RReset, AnchorQuantity::TReset] {
            let m = anchor_model(&p, &anchors, q).unwrap();
            let t = anchors.value(q).unwrap();
            assert!(((m - t) / t).abs() < 1e-9, "{} {m:e} vs {t:e}", q.as_str());
        }
    }

    #[test]
    fn round_trip_on_synthetic_anchors() {
        let truth = crate::calibrated::DEVICE;
        let mut anchors = CalibrationAnchors::default();
        let reference = anchors.clone();
        for a in &mut anchors.anchors {
            a.value = anchor_model(&truth, &reference, a.quantity).unwrap();
            a.tolerance = 0.01;
        }
        let mut start = truth;
        start.i0_cf *= 1.3;
        start.rupture_rate *= 0.8;
        start.i0_ox *= 1.2;
        let r = calibrate(&anchors, &start, &quick()).unwrap();
        assert!(r.converged, "{}", r.detail);
        for res in &r.residuals {
            assert!(res.relative_error.abs() < 0.01, "{res:?}");
        }
    }

    #[test]
    fn single_anchor_is_flagged() {
        let anchors = CalibrationAnchors {
            anchors: vec![Anchor { quantity: AnchorQuantity::RSet, value: 1.25e6, tolerance: 0.2 }],
            ..CalibrationAnchors::default()
        };
        let r = calibrate(&anchors, &crate::calibrated::DEVICE, &quick()).unwrap();
        assert!(r.converged);
        assert!(r.under_determined);
        assert!(r.detail.contains("under-determined"));
        assert_eq!(r.residuals.len(), 1);
    }

    #[test]
    fn same_seed_same_result() {
        let anchors = CalibrationAnchors::default();
        let a = calibrate(&anchors, &crate::calibrated::DEVICE, &quick()).unwrap();
        let b = calibrate(&anchors, &crate::calibrated::DEVICE, &quick()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_anchor_list_rejected() {
        let anchors = CalibrationAnchors { anchors: vec![], ..CalibrationAnchors::default() };
        assert!(calibrate(&anchors, &crate::calibrated::DEVICE, &quick()).is_err());
    }
}
