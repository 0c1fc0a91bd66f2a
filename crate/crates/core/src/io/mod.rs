//! Run configuration, trace and sweep CSV files, the JSON report and the
//! calibration cache.

pub mod config;
pub mod csv;
pub mod report;

pub use config::{load_config, parse_config, parse_current, ParsedConfig, PixelSection, RunConfig};
pub use csv::{parse_trace_csv, read_trace_csv, sweep_csv, trace_csv, write_sweep_csv, write_trace_csv, TraceColumns};
pub use report::{cache_path, load_cached, read_calibration, write_calibration, write_report_json, CalibrationFile, ReportJson};
