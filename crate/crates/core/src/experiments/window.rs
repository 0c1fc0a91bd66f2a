use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sweep::{SweepRow, SweepTable};
use crate::error::{ensure_finite, Result, SimError};
use crate::pixel::Topology;
use crate::solver::EventKind;

/// Limits on the final swing `vrst - final_vpd` of a readable exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadableWindow {
    /// Smallest valid swing (V).
    pub min_detect: f64,
    /// Largest readable swing (V).
    pub max_swing: f64,
    /// Required separation from the dark level, in reset-noise sigmas.
    pub dark_sigmas: f64,
}

impl Default for ReadableWindow {
    fn default() -> Self {
        Self { min_detect: crate::calibrated::MIN_DETECT, max_swing: 0.85, dark_sigmas: 1.0 }
    }
}

impl ReadableWindow {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("min_detect", self.min_detect)?;
        ensure_finite("max_swing", self.max_swing)?;
        ensure_finite("dark_sigmas", self.dark_sigmas)?;
        if !(0.0 < self.min_detect && self.min_detect < self.max_swing) || self.dark_sigmas < 0.0 {
            return Err(SimError::InvalidInput(format!(
                "readable window needs 0 < min_detect < max_swing and dark_sigmas >= 0 (got {}, {}, {})",
                self.min_detect, self.max_swing, self.dark_sigmas
            )));
        }
        Ok(())
    }
}

/// Signed distance to the nearest readability limit (V); `None` when the row
/// failed or fell abruptly. Readable rows have a non-negative margin.
pub fn row_margin(row: &SweepRow, table: &SweepTable, window: &ReadableWindow) -> Option<f64> {
    if row.has_event(EventKind::AbruptFall) {
        return None;
    }
    let v = row.final_vpd?;
    let swing = table.vrst - v;
    let mut margin = (swing - window.min_detect).min(window.max_swing - swing);
    if let Some(dark) = table.dark_vpd {
        margin = margin.min(dark - v - window.dark_sigmas * table.noise_volts);
    }
    Some(margin)
}

pub fn is_readable(row: &SweepRow, table: &SweepTable, window: &ReadableWindow) -> bool {
    row_margin(row, table, window).is_some_and(|m| m >= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowBounds {
    Empty,
    Span { i_exp_min: f64, i_exp_max: f64 },
}

impl WindowBounds {
    pub fn span(&self) -> Option<(f64, f64)> {
        match *self {
            WindowBounds::Empty => None,
            WindowBounds::Span { i_exp_min, i_exp_max } => Some((i_exp_min, i_exp_max)),
        }
    }
}

/// Smallest and largest readable exposure. Edges are refined by linear
/// interpolation of the margin in `log(i_exp)` against the adjacent unreadable
/// row when that row has a margin.
pub fn readable_window_bounds(table: &SweepTable, window: &ReadableWindow) -> Result<WindowBounds> {
    if table.rows.is_empty() {
        return Err(SimError::InvalidInput("readable window of an empty table".into()));
    }
    window.validate()?;
    let margins: Vec<Option<f64>> = table.rows.iter().map(|r| row_margin(r, table, window)).collect();
    let readable = |k: usize| margins[k].is_some_and(|m| m >= 0.0);
    let Some(first) = (0..margins.len()).find(|&k| readable(k)) else {
        return Ok(WindowBounds::Empty);
    };
    let last = (0..margins.len()).rev().find(|&k| readable(k)).unwrap_or(first);

    let edge = |inside: usize, outside: Option<usize>| -> f64 {
        let i_in = table.rows[inside].i_exp;
        let Some(out) = outside else { return i_in };
        let (Some(m_in), Some(m_out)) = (margins[inside], margins[out]) else { return i_in };
        if m_in - m_out <= 0.0 {
            return i_in;
        }
        let (x_in, x_out) = (i_in.ln(), table.rows[out].i_exp.ln());
        let s = m_in / (m_in - m_out);
        (x_in + s * (x_out - x_in)).exp()
    };
    let i_exp_min = edge(first, first.checked_sub(1));
    let i_exp_max = edge(last, (last + 1 < margins.len()).then_some(last + 1));
    Ok(WindowBounds::Span { i_exp_min, i_exp_max })
}

/// `20 log10(i_exp_max / i_exp_min)` in dB.
pub fn operating_dr(i_exp_min: f64, i_exp_max: f64) -> Result<f64> {
    if !(i_exp_min > 0.0 && i_exp_max > 0.0) || !i_exp_min.is_finite() || !i_exp_max.is_finite() {
        return Err(SimError::InvalidInput(format!(
            "operating DR needs positive finite currents (got {i_exp_min:e}, {i_exp_max:e})"
        )));
    }
    Ok(20.0 * (i_exp_max / i_exp_min).log10())
}

/// Hybrid-to-baseline drop ratio `(vrst - vpd2) / (vrst - vpd1)`.
pub fn gain_factor(vrst: f64, vpd1: f64, vpd2: f64) -> Result<f64> {
    ensure_finite("vrst", vrst)?;
    ensure_finite("vpd1", vpd1)?;
    ensure_finite("vpd2", vpd2)?;
    if vrst == vpd1 {
        return Err(SimError::UndefinedGain(vrst));
    }
    if vrst < vpd1 {
        return Err(SimError::InvalidInput(format!("baseline rose above reset ({vpd1} V > {vrst} V)")));
    }
    Ok((vrst - vpd2) / (vrst - vpd1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub i_exp: f64,
    /// `None` where either run failed.
    pub gain: Option<f64>,
}

/// Gain factor per exposure of `hybrid` against a baseline swept on the same grid and reset level.
pub fn gain_factor_curve(baseline: &SweepTable, hybrid: &SweepTable) -> Result<Vec<GainPoint>> {
    if baseline.rows.len() != hybrid.rows.len()
        || baseline.rows.iter().zip(&hybrid.rows).any(|(a, b)| a.i_exp != b.i_exp)
    {
        return Err(SimError::InvalidInput("gain factor needs both sweeps on the same exposure grid".into()));
    }
    if baseline.vrst != hybrid.vrst {
        return Err(SimError::InvalidInput(format!(
            "gain factor needs a common reset level (baseline {} V, hybrid {} V)",
            baseline.vrst, hybrid.vrst
        )));
    }
    baseline
        .rows
        .iter()
        .zip(&hybrid.rows)
        .map(|(b, h)| {
            let gain = match (b.final_vpd, h.final_vpd) {
                (Some(v1), Some(v2)) => Some(gain_factor(baseline.vrst, v1, v2)?),
                _ => None,
            };
            Ok(GainPoint { i_exp: b.i_exp, gain })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPoint {
    pub i_exp: f64,
    pub final_vpd: Option<f64>,
    pub readable: bool,
    pub events: Vec<EventKind>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrReport {
    pub topology: Topology,
    pub vrst: f64,
    pub dark_vpd: Option<f64>,
    pub bounds: WindowBounds,
    pub operating_dr_db: Option<f64>,
    /// Against the baseline report passed to [`dr_report`].
    pub relative_improvement_db: Option<f64>,
    /// Number of runs in which each event kind fired.
    pub events_summary: BTreeMap<String, usize>,
    pub points: Vec<ReportPoint>,
}

impl DrReport {
    pub fn i_exp_min(&self) -> Option<f64> {
        self.bounds.span().map(|s| s.0)
    }

    pub fn i_exp_max(&self) -> Option<f64> {
        self.bounds.span().map(|s| s.1)
    }

    pub fn readable_count(&self) -> usize {
        self.points.iter().filter(|p| p.readable).count()
    }
}

pub fn dr_report(table: &SweepTable, window: &ReadableWindow, baseline: Option<&DrReport>) -> Result<DrReport> {
    let bounds = readable_window_bounds(table, window)?;
    let operating_dr_db = bounds.span().map(|(lo, hi)| operating_dr(lo, hi)).transpose()?;
    let relative_improvement_db = match (operating_dr_db, baseline.and_then(|b| b.operating_dr_db)) {
        (Some(dr), Some(base)) => Some(dr - base),
        _ => None,
    };
    let mut events_summary = BTreeMap::new();
    for row in &table.rows {
        let mut kinds = row.events.clone();
        kinds.sort_by_key(|k| k.as_str());
        kinds.dedup();
        for k in kinds {
            *events_summary.entry(k.as_str().to_string()).or_insert(0) += 1;
        }
        if row.error.is_some() {
            *events_summary.entry("SolverError".to_string()).or_insert(0) += 1;
        }
    }
    let points = table
        .rows
        .iter()
        .map(|r| ReportPoint {
            i_exp: r.i_exp,
            final_vpd: r.final_vpd,
            readable: is_readable(r, table, window),
            events: r.events.clone(),
            error: r.error.clone(),
        })
        .collect();
    Ok(DrReport {
        topology: table.topology,
        vrst: table.vrst,
        dark_vpd: table.dark_vpd,
        bounds,
        operating_dr_db,
        relative_improvement_db,
        events_summary,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table(points: &[(f64, f64)]) -> SweepTable {
        SweepTable {
            topology: Topology::Bare3T,
            vrst: 1.42,
            dark_vpd: None,
            noise_volts: 0.0,
            rows: points
                .iter()
                .map(|&(i, v)| SweepRow { i_exp: i, final_vpd: Some(v), events: vec![], error: None })
                .collect(),
        }
    }

    #[test]
    fn dr_examples() {
        assert_abs_diff_eq!(operating_dr(315e-12, 3.1e-9).unwrap(), 19.86, epsilon = 0.01);
        assert_abs_diff_eq!(operating_dr(2.5e-12, 2.5e-9).unwrap(), 60.0, epsilon = 1e-9);
        assert_abs_diff_eq!(operating_dr(0.5e-12, 1.75e-9).unwrap(), 70.88, epsilon = 0.01);
        assert_eq!(operating_dr(1e-12, 1e-12).unwrap(), 0.0);
        assert!(operating_dr(0.0, 1e-12).is_err());
        assert!(operating_dr(-1.0, 1e-12).is_err());
    }

    #[test]
    fn gain_examples() {
        assert_eq!(gain_factor(1.42, 1.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(gain_factor(1.42, 1.419, 1.17).unwrap(), 250.0, epsilon = 1e-6);
        assert_eq!(gain_factor(1.42, 1.42, 1.0), Err(SimError::UndefinedGain(1.42)));
    }

    #[test]
    fn all_readable_table_returns_its_ends() {
        let t = table(&[(1e-12, 1.2), (1e-11, 1.0), (1e-10, 0.8)]);
        let w = ReadableWindow { min_detect: 0.1, max_swing: 0.85, dark_sigmas: 1.0 };
        assert_eq!(
            readable_window_bounds(&t, &w).unwrap(),
            WindowBounds::Span { i_exp_min: 1e-12, i_exp_max: 1e-10 }
        );
    }

    #[test]
    fn edges_interpolate_in_log_current() {
        // Swings 0.05, 0.15: margin -0.05 and +0.05 around min_detect 0.1.
        let t = table(&[(1e-12, 1.37), (1e-10, 1.27)]);
        let w = ReadableWindow { min_detect: 0.1, max_swing: 0.85, dark_sigmas: 0.0 };
        let (lo, hi) = readable_window_bounds(&t, &w).unwrap().span().unwrap();
        assert!((lo / 1e-11 - 1.0).abs() < 1e-9, "{lo:e}");
        assert_eq!(hi, 1e-10);
    }

    #[test]
    fn abrupt_rows_and_empty_windows() {
        let mut t = table(&[(1e-12, 1.0), (1e-11, 1.0)]);
        for r in &mut t.rows {
            r.events.push(EventKind::AbruptFall);
        }
        assert_eq!(readable_window_bounds(&t, &ReadableWindow::default()).unwrap(), WindowBounds::Empty);
        let r = dr_report(&t, &ReadableWindow::default(), None).unwrap();
        assert_eq!(r.operating_dr_db, None);
        assert_eq!(r.events_summary["AbruptFall"], 2);
        assert!(readable_window_bounds(&table(&[]), &ReadableWindow::default()).is_err());
    }

    #[test]
    fn baseline_against_itself_is_zero() {
        let t = table(&[(1e-12, 1.3), (1e-10, 1.0)]);
        let w = ReadableWindow::default();
        let base = dr_report(&t, &w, None).unwrap();
        let again = dr_report(&t, &w, Some(&base)).unwrap();
        assert_eq!(again.relative_improvement_db, Some(0.0));
    }

    #[test]
    fn dark_reference_excludes_rows_near_dark_level() {
        let mut t = table(&[(1e-12, 1.17), (1e-11, 1.1)]);
        t.dark_vpd = Some(1.17);
        t.noise_volts = 1e-3;
        let w = ReadableWindow { min_detect: 0.1, max_swing: 0.85, dark_sigmas: 1.0 };
        let (lo, _) = readable_window_bounds(&t, &w).unwrap().span().unwrap();
        assert!(lo > 1e-12 && lo < 1e-11);
    }
}
