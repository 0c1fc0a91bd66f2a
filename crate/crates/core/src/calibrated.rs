//! Frozen calibration output used as the library defaults. Regenerate with
//! `hps calibrate` and the default anchors, seed 0.

use crate::device::OxRamParams;

pub const DEVICE: OxRamParams = OxRamParams {
    oxide_thickness: 10.0,
    gap_min: 0.1,
    gap_max: 1.7,
    cf_decay: 62.06321048420413,
    cf_field: 3.5789493468252926,
    ox_decay: 7.99998664857071,
    ox_field: 1.4998135086604654,
    i0_cf: 0.02509715811839836,
    i0_ox: 8.92441355678953e-6,
    growth_rate: 51889.64733373756,
    rupture_rate: 51889.64733373756,
    growth_field: 0.3,
    rupture_field: 0.3,
    c_pox: 0.0,
};

/// Constant selector gate level for the schedule (V).
pub const GATE_LEVEL: f64 = 0.4890046451215942;

/// Lower readable swing that gives the bare pixel a 20 dB window (V).
pub const MIN_DETECT: f64 = 0.08500000000031255;
