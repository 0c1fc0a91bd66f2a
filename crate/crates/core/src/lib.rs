//! Transient simulation of a 3T CMOS pixel and of the hybrid pixel that adds
//! a 1T-1R OxRAM branch on the photodiode node to widen its readable exposure range.

pub mod calibrated;
pub mod cli;
pub mod device;
pub mod error;
pub mod experiments;
pub mod io;
pub mod pixel;
pub mod solver;

pub use error::{Result, SimError};
