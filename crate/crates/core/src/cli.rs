//! The `hps` command line: simulate, sweep, report and calibrate.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 when a
//! solver run or the calibration fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Result, SimError};
use crate::experiments::{
    calibrate_pixel, dr_report, initial_guess, run_sweep, table1_report, PixelCalibration, ReadableWindow,
};
use crate::io::{
    cache_path, load_cached, load_config, parse_config, parse_current, write_calibration, write_report_json,
    write_sweep_csv, write_trace_csv, CalibrationFile, ParsedConfig, ReportJson,
};
use crate::pixel::Stimulus;
use crate::solver::integrate;

#[derive(Debug, Parser)]
#[command(name = "hps", version, about = "Hybrid OxRAM pixel transient simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one exposure and write the trace.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Exposure current, e.g. 1nA.
        #[arg(long)]
        iexp: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the exposure current and write the per-point table.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate (or reuse the cached calibration) and compare all pixel cases.
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Ignore any cached calibration.
        #[arg(long)]
        recalibrate: bool,
        /// Cache directory; defaults to the directory of `--out`.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Fit the device to its anchors and the pixel to its targets.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hps: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn config_from(path: Option<&Path>) -> Result<ParsedConfig> {
    match path {
        Some(p) => load_config(p),
        None => parse_config(""),
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, iexp, out } => {
            let parsed = config_from(config.as_deref())?;
            let i_exp = parse_current(&iexp)?;
            let pixel = parsed.config.pixel_config()?;
            let trace = integrate(&pixel, &Stimulus::new(i_exp), &parsed.config.solver)?;
            write_trace_csv(&trace, &out)?;
            let events: Vec<&str> = trace.events.iter().map(|e| e.kind.as_str()).collect();
            println!(
                "{} at {i_exp:.4e} A: final VPD {:.6} V, events [{}], {} samples -> {}",
                pixel.topology.as_str(),
                trace.final_vpd,
                events.join(", "),
                trace.len(),
                out.display()
            );
            Ok(())
        }
        Command::Sweep { config, out } => {
            let parsed = config_from(config.as_deref())?;
            let spec = parsed.config.sweep_spec()?;
            let table = run_sweep(&spec)?;
            let window = parsed.config.window;
            write_sweep_csv(&table, &window, &out)?;
            let report = dr_report(&table, &window, None)?;
            match (report.i_exp_min(), report.i_exp_max(), report.operating_dr_db) {
                (Some(lo), Some(hi), Some(dr)) => {
                    println!("readable {lo:.4e} A to {hi:.4e} A, operating DR {dr:.2} dB -> {}", out.display())
                }
                _ => println!("no readable exposure in the sweep -> {}", out.display()),
            }
            Ok(())
        }
        Command::Calibrate { config, out, seed } => {
            let mut parsed = config_from(config.as_deref())?;
            if let Some(seed) = seed {
                parsed.config.calibration.options.seed = seed;
            }
            let file = calibrate_config(&parsed)?;
            write_calibration(&file, &out)?;
            print_calibration(&file.calibration);
            Ok(())
        }
        Command::Report { config, out, recalibrate, cache_dir } => {
            let parsed = config_from(config.as_deref())?;
            let dir = cache_dir
                .or_else(|| out.parent().map(Path::to_path_buf))
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or_else(|| PathBuf::from("."));
            let key = parsed.calibration_key()?;
            let file = match load_cached(&dir, &key).filter(|_| !recalibrate) {
                Some(f) => {
                    eprintln!("using cached calibration {}", cache_path(&dir, &key).display());
                    f
                }
                None => {
                    let f = calibrate_config(&parsed)?;
                    std::fs::create_dir_all(&dir)
                        .map_err(|e| SimError::Io { path: dir.display().to_string(), message: e.to_string() })?;
                    write_calibration(&f, &cache_path(&dir, &key))?;
                    f
                }
            };
            let cal = &file.calibration;
            let mut window = parsed.config.window;
            if parsed.defaulted.contains("window.min_detect") {
                window.min_detect = cal.min_detect;
            }
            let setup = parsed.config.table1_setup(cal.device.params, cal.gate_level)?;
            let report = table1_report(&setup, &window, &parsed.config.sweep, &parsed.config.solver, cal.device.residuals.clone())?;
            let json = ReportJson::new(&report, cal);
            write_report_json(&json, &out)?;
            print_report(&json, &window);
            Ok(())
        }
    }
}

fn calibrate_config(parsed: &ParsedConfig) -> Result<CalibrationFile> {
    let c = &parsed.config;
    let anchors = &c.calibration.anchors;
    let initial = initial_guess(anchors, &parsed.calibration_structure())?;
    let templates = c.table1_setup(initial, c.pixel.vg)?;
    let calibration = calibrate_pixel(
        anchors,
        &initial,
        &c.calibration.options,
        &c.calibration.targets,
        &c.solver,
        &templates.baseline,
        &templates.case_i,
    )?;
    if !calibration.device.converged {
        return Err(SimError::Calibration(calibration.device.detail));
    }
    Ok(CalibrationFile { schema: crate::io::report::SCHEMA, key: parsed.calibration_key()?, calibration })
}

fn print_calibration(c: &PixelCalibration) {
    for r in &c.device.residuals {
        println!(
            "{:<8} target {:.4e} model {:.4e} ({:+.3}%, tolerance {:.0}%)",
            r.quantity.as_str(),
            r.target,
            r.model,
            100.0 * r.relative_error,
            100.0 * r.tolerance
        );
    }
    println!("gate level {:.9} V, min_detect {:.6} V", c.gate_level, c.min_detect);
    println!("{}", c.device.detail);
}

fn print_report(json: &ReportJson, window: &ReadableWindow) {
    println!("readable swing [{:.4}, {:.4}] V", window.min_detect, window.max_swing);
    for row in [&json.baseline, &json.case_i, &json.case_ii, &json.case_iii] {
        let fmt = |x: Option<f64>, unit: &str| x.map_or("-".to_string(), |v| format!("{v:.4e} {unit}"));
        let db = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2} dB"));
        println!(
            "{:<9} {} .. {}  DR {}  relative {}",
            row.topology,
            fmt(row.i_exp_min, "A"),
            fmt(row.i_exp_max, "A"),
            db(row.operating_dr_db),
            db(row.relative_improvement_db)
        );
    }
}
