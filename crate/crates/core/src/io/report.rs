use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ParsedConfig;
use super::csv::write_synced;
use crate::device::OxRamParams;
use crate::error::{Result, SimError};
use crate::experiments::{structural_prior, DrReport, PixelCalibration, Residual, Table1Report};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub topology: String,
    #[serde(rename = "vrst_V")]
    pub vrst: f64,
    #[serde(rename = "dark_vpd_V")]
    pub dark_vpd: Option<f64>,
    #[serde(rename = "i_exp_min_A")]
    pub i_exp_min: Option<f64>,
    #[serde(rename = "i_exp_max_A")]
    pub i_exp_max: Option<f64>,
    pub operating_dr_db: Option<f64>,
    pub relative_improvement_db: Option<f64>,
    pub readable_points: usize,
    pub swept_points: usize,
    pub events_summary: BTreeMap<String, usize>,
    pub calibration_residuals: Vec<Residual>,
}

impl ReportRow {
    pub fn new(report: &DrReport, residuals: &[Residual]) -> Self {
        Self {
            topology: report.topology.as_str().to_string(),
            vrst: report.vrst,
            dark_vpd: report.dark_vpd,
            i_exp_min: report.i_exp_min(),
            i_exp_max: report.i_exp_max(),
            operating_dr_db: report.operating_dr_db,
            relative_improvement_db: report.relative_improvement_db,
            readable_points: report.readable_count(),
            swept_points: report.points.len(),
            events_summary: report.events_summary.clone(),
            calibration_residuals: residuals.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub schema: u32,
    pub baseline: ReportRow,
    pub case_i: ReportRow,
    pub case_ii: ReportRow,
    pub case_iii: ReportRow,
    #[serde(rename = "gate_level_V")]
    pub gate_level: f64,
    #[serde(rename = "min_detect_V")]
    pub min_detect: f64,
}

impl ReportJson {
    pub fn new(report: &Table1Report, calibration: &PixelCalibration) -> Self {
        let r = &report.calibration_residuals;
        Self {
            schema: SCHEMA,
            baseline: ReportRow::new(&report.baseline, r),
            case_i: ReportRow::new(&report.case_i, r),
            case_ii: ReportRow::new(&report.case_ii, r),
            case_iii: ReportRow::new(&report.case_iii, r),
            gate_level: calibration.gate_level,
            min_detect: calibration.min_detect,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| SimError::InvalidInput(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_report_json(report: &ReportJson, path: &Path) -> Result<()> {
    write_synced(path, &to_json(report)?)
}

/// Calibration output as written by `calibrate` and kept in the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub schema: u32,
    /// Hash of every input that shapes the calibration.
    pub key: String,
    pub calibration: PixelCalibration,
}

#[derive(Serialize)]
struct KeyInputs<'a> {
    anchors: String,
    options: &'a crate::experiments::CalibrationOptions,
    targets: &'a crate::experiments::PixelTargets,
    structure: OxRamParams,
    photodiode: &'a crate::device::PhotodiodeParams,
    selector: &'a crate::device::MosfetParams,
    solver: &'a crate::solver::SolverOptions,
    vs_level: f64,
}

impl ParsedConfig {
    /// Starting structure of the fit: the built-in prior, with any `[oxram]`
    /// key given in the file taking precedence.
    pub fn calibration_structure(&self) -> OxRamParams {
        let prior = structural_prior();
        let given = |k: &str| !self.defaulted.contains(&format!("oxram.{k}"));
        let c = &self.config.oxram;
        let pick = |k: &str, from_file: f64, from_prior: f64| if given(k) { from_file } else { from_prior };
        OxRamParams {
            oxide_thickness: pick("oxide_thickness", c.oxide_thickness, prior.oxide_thickness),
            gap_min: pick("gap_min", c.gap_min, prior.gap_min),
            gap_max: pick("gap_max", c.gap_max, prior.gap_max),
            cf_decay: pick("cf_decay", c.cf_decay, prior.cf_decay),
            cf_field: pick("cf_field", c.cf_field, prior.cf_field),
            ox_decay: pick("ox_decay", c.ox_decay, prior.ox_decay),
            ox_field: pick("ox_field", c.ox_field, prior.ox_field),
            i0_cf: pick("i0_cf", c.i0_cf, prior.i0_cf),
            i0_ox: pick("i0_ox", c.i0_ox, prior.i0_ox),
            growth_rate: pick("growth_rate", c.growth_rate, prior.growth_rate),
            rupture_rate: pick("rupture_rate", c.rupture_rate, prior.rupture_rate),
            growth_field: pick("growth_field", c.growth_field, prior.growth_field),
            rupture_field: pick("rupture_field", c.rupture_field, prior.rupture_field),
            c_pox: pick("c_pox", c.c_pox, prior.c_pox),
        }
    }

    /// SHA-256 over the calibration inputs, hex encoded.
    pub fn calibration_key(&self) -> Result<String> {
        let c = &self.config;
        let inputs = KeyInputs {
            anchors: c.calibration.anchors.fingerprint(),
            options: &c.calibration.options,
            targets: &c.calibration.targets,
            structure: self.calibration_structure(),
            photodiode: &c.photodiode,
            selector: &c.selector,
            solver: &c.solver,
            vs_level: c.pixel.vs_level,
        };
        let text = serde_json::to_string(&inputs).map_err(|e| SimError::InvalidInput(e.to_string()))?;
        let digest = Sha256::digest(text.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

pub fn write_calibration(file: &CalibrationFile, path: &Path) -> Result<()> {
    write_synced(path, &to_json(file)?)
}

pub fn read_calibration(path: &Path) -> Result<CalibrationFile> {
    let io = |m: String| SimError::Io { path: path.display().to_string(), message: m };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    let file: CalibrationFile = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
    if file.schema != SCHEMA {
        return Err(io(format!("unsupported schema {}", file.schema)));
    }
    Ok(file)
}

/// Sidecar cache file for a calibration key.
pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("hps-calibration-{}.json", &key[..key.len().min(16)]))
}

/// Cached calibration for `key`, if a readable file with the full key exists.
pub fn load_cached(dir: &Path, key: &str) -> Option<CalibrationFile> {
    read_calibration(&cache_path(dir, key)).ok().filter(|f| f.key == key)
}
