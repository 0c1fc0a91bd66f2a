//! Exposure sweeps, readable windows, operating DR, gain factor, the
//! with/without-OxRAM comparison and the calibration stages.

mod calibration;
mod studies;
mod sweep;
mod table1;
mod window;

pub use calibration::{
    anchor_model, calibrate, calibrate_gate_level, calibrate_min_detect, calibrate_pixel, dark_level, direct_reset,
    initial_guess, residuals, set_gap, structural_prior, Anchor, AnchorQuantity, CalibrationAnchors,
    CalibrationOptions, CalibrationResult, DirectReset, GateTarget, PixelCalibration, PixelTargets, Residual,
    SET_GAP_FRACTION,
};
pub use studies::{
    final_vpd_spread, level_study, long_exposure, with_exposure, LevelRun, R_RESET_LEVELS, R_SET_LEVELS,
};
pub use sweep::{run_points, run_sweep, with_workers, SweepRow, SweepSpec, SweepTable, THREADS_ENV};
pub use table1::{sweep_config, table1_report, SweepGrid, Table1Report, Table1Setup};
pub use window::{
    dr_report, gain_factor, gain_factor_curve, is_readable, operating_dr, readable_window_bounds, row_margin,
    DrReport, GainPoint, ReadableWindow, ReportPoint, WindowBounds,
};
