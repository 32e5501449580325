use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gfm_core::cli::config::parse_config;
use gfm_core::cli::presets;
use gfm_core::cli::suite::{format_report, run_scenario, run_suite, RunOptions};
use gfm_core::ControlMode;

/// Grid-forming battery inverter simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario given as a preset name or a TOML config path.
    Run {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run every built-in scenario and write summary.json.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Scenarios simulated in parallel.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Solver step [s].
    #[arg(long)]
    dt: Option<f64>,
    /// Control strategy override.
    #[arg(long)]
    mode: Option<ControlMode>,
    /// Also write matplotlib scripts.
    #[arg(long)]
    plots: bool,
}

impl Common {
    fn options(self) -> RunOptions {
        RunOptions { out: self.out, dt: self.dt, mode: self.mode, plots: self.plots }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { scenario, common } => {
            let scenario = match presets::preset(&scenario) {
                Some(s) => s,
                None => {
                    let text = std::fs::read_to_string(&scenario).map_err(|e| format!("{scenario}: {e}"))?;
                    parse_config(&text).map_err(|e| format!("{scenario}: {e}"))?
                }
            };
            let report = run_scenario(scenario, &common.options())?;
            print!("{}", format_report(&report));
            Ok(report.pass)
        }
        Command::Suite { common, jobs } => {
            let summary = run_suite(&common.options(), jobs)?;
            for report in &summary.scenarios {
                print!("{}", format_report(report));
            }
            Ok(summary.pass)
        }
    }
}
