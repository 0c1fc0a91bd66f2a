use serde::{Deserialize, Serialize};

use super::calibration::Residual;
use super::sweep::{run_sweep, SweepSpec, SweepTable};
use super::window::{dr_report, DrReport, ReadableWindow};
use crate::device::OxRamParams;
use crate::error::Result;
use crate::pixel::{PixelConfig, Topology};
use crate::solver::SolverOptions;

/// Exposure grid shared by every row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub i_min: f64,
    pub i_max: f64,
    pub points_per_decade: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { i_min: 100e-15, i_max: 10e-9, points_per_decade: 12 }
    }
}

/// Pixels compared in the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Setup {
    pub baseline: PixelConfig,
    pub case_i: PixelConfig,
    pub case_ii: PixelConfig,
    pub case_iii: PixelConfig,
}

impl Table1Setup {
    pub fn new(oxram: OxRamParams, gate_level: f64) -> Result<Self> {
        Ok(Self {
            baseline: PixelConfig::bare(),
            case_i: PixelConfig::hybrid_with(Topology::HybridCaseI, oxram, gate_level)?,
            case_ii: PixelConfig::hybrid_with(Topology::HybridCaseII, oxram, gate_level)?,
            case_iii: PixelConfig::hybrid_with(Topology::HybridCaseIII, oxram, gate_level)?,
        })
    }
}

impl Default for Table1Setup {
    fn default() -> Self {
        Self::new(crate::calibrated::DEVICE, crate::calibrated::GATE_LEVEL).expect("frozen calibration is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub baseline: DrReport,
    pub case_i: DrReport,
    pub case_ii: DrReport,
    pub case_iii: DrReport,
    pub calibration_residuals: Vec<Residual>,
}

pub fn sweep_config(config: &PixelConfig, grid: &SweepGrid, options: &SolverOptions) -> Result<SweepTable> {
    let spec = SweepSpec {
        i_min: grid.i_min,
        i_max: grid.i_max,
        points_per_decade: grid.points_per_decade,
        config: config.clone(),
        options: *options,
    };
    run_sweep(&spec)
}

/// Bare, SET-to-RESET, soft-to-hard RESET and RESET-to-SET rows; hybrid
/// improvements are taken against the simulated bare row.
pub fn table1_report(
    setup: &Table1Setup,
    window: &ReadableWindow,
    grid: &SweepGrid,
    options: &SolverOptions,
    calibration_residuals: Vec<Residual>,
) -> Result<Table1Report> {
    let baseline = dr_report(&sweep_config(&setup.baseline, grid, options)?, window, None)?;
    let row = |c: &PixelConfig| -> Result<DrReport> {
        dr_report(&sweep_config(c, grid, options)?, window, Some(&baseline))
    };
    Ok(Table1Report {
        case_i: row(&setup.case_i)?,
        case_ii: row(&setup.case_ii)?,
        case_iii: row(&setup.case_iii)?,
        baseline,
        calibration_residuals,
    })
}
