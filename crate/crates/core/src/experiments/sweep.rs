use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result, SimError};
use crate::pixel::{PixelConfig, Stimulus, Topology};
use crate::solver::{integrate, EventKind, SolverOptions};

/// Environment variable capping the sweep worker count.
pub const THREADS_ENV: &str = "HPS_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Lowest exposure current (A).
    pub i_min: f64,
    /// Highest exposure current (A).
    pub i_max: f64,
    pub points_per_decade: usize,
    pub config: PixelConfig,
    pub options: SolverOptions,
}

impl SweepSpec {
    /// Default 100 fA to 10 nA range, 12 points per decade.
    pub fn new(config: PixelConfig) -> Self {
        Self { i_min: 100e-15, i_max: 10e-9, points_per_decade: 12, config, options: SolverOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("i_min", self.i_min)?;
        ensure_finite("i_max", self.i_max)?;
        if !(0.0 < self.i_min && self.i_min < self.i_max) {
            return Err(SimError::InvalidInput(format!(
                "sweep needs 0 < i_min < i_max (got {:e}, {:e})",
                self.i_min, self.i_max
            )));
        }
        if self.points_per_decade == 0 {
            return Err(SimError::InvalidInput("points_per_decade must be >= 1".into()));
        }
        self.config.validate()?;
        self.options.validate()
    }

    /// Log-spaced exposure currents, both ends included.
    pub fn currents(&self) -> Vec<f64> {
        log_points(self.i_min, self.i_max, self.points_per_decade)
    }
}

pub(crate) fn log_points(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64) - 1e-9).ceil().max(1.0) as usize;
    let step = decades / n as f64;
    let mut out: Vec<f64> = (0..n).map(|k| lo * 10f64.powf(k as f64 * step)).collect();
    out.push(hi);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub i_exp: f64,
    /// `None` when the run failed.
    pub final_vpd: Option<f64>,
    pub events: Vec<EventKind>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.contains(&kind)
    }
}

/// Per-point sweep output plus the dark reference of the same pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub topology: Topology,
    pub vrst: f64,
    /// Final VPD with no exposure, if it was simulated.
    pub dark_vpd: Option<f64>,
    /// Reset-noise sigma on the PD node (V).
    pub noise_volts: f64,
    pub rows: Vec<SweepRow>,
}

/// Run one integration per exposure current. Failures are recorded per row.
pub fn run_points(config: &PixelConfig, options: &SolverOptions, currents: &[f64]) -> Vec<SweepRow> {
    let run = |&i_exp: &f64| match integrate(config, &Stimulus::new(i_exp), options) {
        Ok(trace) => SweepRow {
            i_exp,
            final_vpd: Some(trace.final_vpd),
            events: trace.events.iter().map(|e| e.kind).collect(),
            error: None,
        },
        Err(e) => SweepRow { i_exp, final_vpd: None, events: Vec::new(), error: Some(e.to_string()) },
    };
    with_workers(|| currents.par_iter().map(run).collect())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let mut currents = spec.currents();
    currents.insert(0, 0.0);
    let mut rows = run_points(&spec.config, &spec.options, &currents);
    let dark = rows.remove(0);
    Ok(SweepTable {
        topology: spec.config.topology,
        vrst: spec.config.pd.vrst,
        dark_vpd: dark.final_vpd,
        noise_volts: spec.config.reset_noise_volts(),
        rows,
    })
}

/// Run `f` on a pool capped by `HPS_THREADS`, or on the global pool.
pub fn with_workers<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
