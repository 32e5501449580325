//! Runs scenarios, writes their records and the summary report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::checks::{evaluate, ScenarioReport, SummaryReport};
use super::plots::{emit_plots, PlotError};
use super::presets;
use crate::controller::ControlMode;
use crate::engine::{run, EngineError, Scenario, TimeSeriesRecord, CHANNELS};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{scenario}: {source}")]
    Engine { scenario: String, source: EngineError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("cannot encode summary: {0}")]
    Json(#[from] serde_json::Error),
}

/// Output and override options shared by `run` and `suite`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub dt: Option<f64>,
    pub mode: Option<ControlMode>,
    pub plots: bool,
}

impl RunOptions {
    fn apply(&self, scenario: &mut Scenario) {
        if let Some(dt) = self.dt {
            scenario.dt = dt;
        }
        if let Some(mode) = self.mode {
            scenario.mode = mode;
        }
    }
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Simulates one scenario, writes `<name>.csv` (and plot scripts) into
/// `options.out` and evaluates its acceptance checks.
pub fn run_scenario(mut scenario: Scenario, options: &RunOptions) -> Result<ScenarioReport, SuiteError> {
    options.apply(&mut scenario);
    let record = run(&scenario).map_err(|source| SuiteError::Engine { scenario: scenario.name.clone(), source })?;
    create_dir(&options.out)?;
    let csv_path = options.out.join(format!("{}.csv", scenario.name));
    write_csv(&record, &csv_path)?;
    if options.plots {
        for (file, script) in emit_plots(&record)? {
            let path = options.out.join(file);
            fs::write(&path, script).map_err(|source| SuiteError::Io { path, source })?;
        }
    }
    Ok(evaluate(&scenario, &record))
}

/// Runs every built-in scenario on at most `jobs` threads and writes the
/// summary report next to the records.
pub fn run_suite(options: &RunOptions, jobs: usize) -> Result<SummaryReport, SuiteError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let reports = pool.install(|| {
        presets::all()
            .into_par_iter()
            .map(|s| run_scenario(s, options))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let summary = SummaryReport::new(reports);
    write_summary(&summary, &options.out.join(SUMMARY_FILE))?;
    Ok(summary)
}

fn create_dir(dir: &Path) -> Result<(), SuiteError> {
    fs::create_dir_all(dir).map_err(|source| SuiteError::Io { path: dir.to_path_buf(), source })
}

/// Writes the record with a [`CHANNELS`] header and shortest round-trip
/// decimal formatting.
pub fn write_csv(record: &TimeSeriesRecord, path: &Path) -> Result<(), SuiteError> {
    let wrap = |source| SuiteError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(CHANNELS).map_err(wrap)?;
    for k in 0..record.len() {
        w.write_record(record.row(k).map(|v| v.to_string())).map_err(wrap)?;
    }
    w.flush().map_err(|source| SuiteError::Io { path: path.to_path_buf(), source })
}

pub fn write_summary(summary: &SummaryReport, path: &Path) -> Result<(), SuiteError> {
    let mut f = fs::File::create(path).map_err(|source| SuiteError::Io { path: path.to_path_buf(), source })?;
    serde_json::to_writer_pretty(&mut f, summary)?;
    writeln!(f).map_err(|source| SuiteError::Io { path: path.to_path_buf(), source })
}

/// One line per check, prefixed with PASS or FAIL.
pub fn format_report(report: &ScenarioReport) -> String {
    let mut out = format!(
        "{} {}{}\n",
        verdict(report.pass),
        report.scenario,
        match report.divergence_time {
            Some(t) => format!(" (diverged at {t:.4} s)"),
            None => String::new(),
        }
    );
    for c in &report.checks {
        let bounds = match (c.min, c.max) {
            (Some(lo), Some(hi)) => format!("[{lo:.4}, {hi:.4}]"),
            (Some(lo), None) => format!(">= {lo:.4}"),
            (None, Some(hi)) => format!("<= {hi:.4}"),
            (None, None) => String::new(),
        };
        out.push_str(&format!("  {} {:<32} {:>10.4} {}\n", verdict(c.pass), c.name, c.value, bounds));
    }
    out
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Event;

    fn short() -> Scenario {
        let mut s = Scenario::new("short", ControlMode::Esc, 0.05);
        s.p_ref = 0.3;
        s.events.push(Event::SetpointStep { time: 0.02, p_ref: 0.4 });
        s
    }

    #[test]
    fn csv_header_and_precision() {
        let dir = tempfile::tempdir().unwrap();
        let options = RunOptions { out: dir.path().to_path_buf(), ..Default::default() };
        let report = run_scenario(short(), &options).unwrap();
        assert!(report.pass);

        let record = run(&short()).unwrap();
        let mut reader = csv::Reader::from_path(dir.path().join("short.csv")).unwrap();
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, CHANNELS);
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), record.len());
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), CHANNELS.len());
            let parsed: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
            assert_eq!(parsed, record.row(k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let options = RunOptions {
            out: dir.path().to_path_buf(),
            dt: Some(40e-6),
            mode: Some(ControlMode::Vsm),
            plots: true,
        };
        run_scenario(short(), &options).unwrap();
        assert!(dir.path().join("short.csv").exists());
        assert!(dir.path().join("short_plot.py").exists());
    }

    #[test]
    fn report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let options = RunOptions { out: dir.path().to_path_buf(), ..Default::default() };
        let text = format_report(&run_scenario(short(), &options).unwrap());
        assert!(text.starts_with("PASS short\n"));
        assert!(text.contains("PASS no_divergence"));
    }
}
