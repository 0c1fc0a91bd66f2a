use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Result, SimError};
use crate::experiments::{is_readable, ReadableWindow, SweepTable};
use crate::solver::TransientTrace;

pub const TRACE_HEADER: &str = "t_s,vpd_V,i_ox_A,gap_nm,event";
pub const SWEEP_HEADER: &str = "i_exp_A,final_vpd_V,readable,events,error";

fn io_err(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Scientific notation with 17 significant digits, enough to round-trip an f64.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trace as CSV text. Each event is written at the first sample at or after its time.
pub fn trace_csv(trace: &TransientTrace) -> String {
    let n = trace.t.len();
    let mut labels: Vec<Vec<&str>> = vec![Vec::new(); n];
    for e in &trace.events {
        let k = trace.t.iter().position(|&t| t >= e.t_event).unwrap_or(n.saturating_sub(1));
        if n > 0 {
            labels[k].push(e.kind.as_str());
        }
    }
    let mut out = String::with_capacity(96 * (n + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for k in 0..n {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sci(trace.t[k]),
            sci(trace.vpd[k]),
            sci(trace.i_ox[k]),
            sci(trace.gap[k]),
            labels[k].join(";")
        ));
    }
    out
}

/// Write `contents` and flush it to disk before returning.
pub fn write_synced(path: &Path, contents: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))?;
    let file = w.into_inner().map_err(|e| io_err(path, e.error()))?;
    file.sync_all().map_err(|e| io_err(path, e))
}

pub fn write_trace_csv(trace: &TransientTrace, path: &Path) -> Result<()> {
    write_synced(path, &trace_csv(trace))
}

/// Columns of a trace CSV as read back.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceColumns {
    pub t: Vec<f64>,
    pub vpd: Vec<f64>,
    pub i_ox: Vec<f64>,
    pub gap: Vec<f64>,
    /// Event cell per row, empty when no event.
    pub event: Vec<String>,
}

pub fn parse_trace_csv(text: &str) -> std::result::Result<TraceColumns, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => return Err(format!("expected header `{TRACE_HEADER}`, found {other:?}")),
    }
    let mut cols = TraceColumns::default();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(format!("row {}: expected 5 cells, found {}", k + 2, cells.len()));
        }
        let num = |i: usize| cells[i].parse::<f64>().map_err(|e| format!("row {}, column {}: {e}", k + 2, i + 1));
        cols.t.push(num(0)?);
        cols.vpd.push(num(1)?);
        cols.i_ox.push(num(2)?);
        cols.gap.push(num(3)?);
        cols.event.push(cells[4].to_string());
    }
    Ok(cols)
}

pub fn read_trace_csv(path: &Path) -> Result<TraceColumns> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_trace_csv(&text).map_err(|e| io_err(path, e))
}

/// Sweep rows with a readability flag; events joined by `;`.
pub fn sweep_csv(table: &SweepTable, window: &ReadableWindow) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &table.rows {
        let events: Vec<&str> = row.events.iter().map(|e| e.as_str()).collect();
        let error = row.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sci(row.i_exp),
            row.final_vpd.map(sci).unwrap_or_default(),
            is_readable(row, table, window),
            events.join(";"),
            error
        ));
    }
    out
}

pub fn write_sweep_csv(table: &SweepTable, window: &ReadableWindow, path: &Path) -> Result<()> {
    write_synced(path, &sweep_csv(table, window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Event, EventKind};

    fn trace() -> TransientTrace {
        TransientTrace {
            t: vec![0.0, 1e-7, 2.5e-7],
            vpd: vec![1.42, 1.4, 1.1 + 1e-13],
            i_ox: vec![0.0, 3.3e-8, 1.0 / 3.0 * 1e-9],
            gap: vec![0.196, 0.5, 1.7],
            clamped: vec![false; 3],
            events: vec![],
            final_vpd: 1.1 + 1e-13,
            final_gap: 1.7,
            peak_i_ox: 3.3e-8,
            t_peak_i_ox: 1e-7,
            steps_accepted: 2,
            steps_rejected: 0,
        }
    }

    #[test]
    fn no_events_leaves_column_empty() {
        let cols = parse_trace_csv(&trace_csv(&trace())).unwrap();
        assert!(cols.event.iter().all(|e| e.is_empty()));
    }

    #[test]
    fn event_lands_on_first_later_sample() {
        let mut t = trace();
        t.events.push(Event { kind: EventKind::SetToReset, t_event: 1.5e-7, detail: String::new() });
        let cols = parse_trace_csv(&trace_csv(&t)).unwrap();
        assert_eq!(cols.event, vec!["", "", "SetToReset"]);
    }

    #[test]
    fn values_round_trip_bitwise() {
        let t = trace();
        let cols = parse_trace_csv(&trace_csv(&t)).unwrap();
        assert_eq!(cols.t, t.t);
        assert_eq!(cols.vpd, t.vpd);
        assert_eq!(cols.i_ox, t.i_ox);
        assert_eq!(cols.gap, t.gap);
    }

    #[test]
    fn header_is_checked() {
        assert!(parse_trace_csv("t,v\n").is_err());
        assert!(parse_trace_csv(&format!("{TRACE_HEADER}\n1,2,3\n")).is_err());
    }

    #[test]
    fn write_and_read_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&trace(), &path).unwrap();
        assert_eq!(read_trace_csv(&path).unwrap().t, trace().t);
        let missing = dir.path().join("nope").join("trace.csv");
        let err = write_trace_csv(&trace(), &missing).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
