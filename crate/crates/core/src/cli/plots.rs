//! Matplotlib scripts that plot a recorded CSV with the figure layouts of
//! each built-in scenario.

use thiserror::Error;

use super::checks::Profile;
use crate::engine::{TimeSeriesRecord, CHANNELS};

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("record `{0}` has no samples")]
    EmptyRecord(String),
    #[error("record `{scenario}` lacks channel `{channel}`")]
    MissingChannel { scenario: String, channel: String },
}

/// One subplot: y label and plotted channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub ylabel: &'static str,
    pub channels: &'static [&'static str],
}

const CURRENTS: Panel = Panel { ylabel: "i_s [p.u.]", channels: &["i_sa", "i_sb", "i_sc"] };
const VOLTAGES: Panel = Panel { ylabel: "v_s [p.u.]", channels: &["v_sa", "v_sb", "v_sc"] };
const FREQUENCY: Panel = Panel { ylabel: "f [Hz]", channels: &["f_s", "f_grid"] };
const POWERS: Panel = Panel { ylabel: "P [p.u.]", channels: &["p_ac", "p_cs", "p_esc"] };
const GRID_CURRENTS: Panel = Panel { ylabel: "i_g [p.u.]", channels: &["i_ga", "i_gb", "i_gc"] };

/// Panel layout for a scenario name.
pub fn layout(scenario: &str) -> Vec<Panel> {
    match Profile::of(scenario) {
        Profile::VsmInstability => vec![CURRENTS, FREQUENCY],
        Profile::PowerStep => vec![POWERS],
        Profile::BlackStart => vec![VOLTAGES, GRID_CURRENTS],
        Profile::GridDisconnection => vec![POWERS, FREQUENCY],
        Profile::FaultRideThrough => vec![VOLTAGES, CURRENTS],
        Profile::PhaseJumpCharging | Profile::PhaseJumpDischarging | Profile::Generic => {
            vec![CURRENTS, FREQUENCY, POWERS]
        }
    }
}

/// Returns `(file name, script)` pairs; the script reads `<scenario>.csv`
/// from its own directory.
pub fn emit_plots(record: &TimeSeriesRecord) -> Result<Vec<(String, String)>, PlotError> {
    if record.is_empty() {
        return Err(PlotError::EmptyRecord(record.scenario.clone()));
    }
    let panels = layout(&record.scenario);
    for ch in panels.iter().flat_map(|p| p.channels) {
        if !CHANNELS.contains(ch) {
            return Err(PlotError::MissingChannel { scenario: record.scenario.clone(), channel: ch.to_string() });
        }
    }
    Ok(vec![(format!("{}_plot.py", record.scenario), script(&record.scenario, &panels))])
}

fn script(scenario: &str, panels: &[Panel]) -> String {
    let mut s = String::new();
    s.push_str("import csv\nimport os\n\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    s.push_str("here = os.path.dirname(os.path.abspath(__file__))\n");
    s.push_str(&format!("name = \"{scenario}\"\n"));
    s.push_str("with open(os.path.join(here, name + \".csv\")) as f:\n");
    s.push_str("    rows = list(csv.DictReader(f))\n");
    s.push_str("col = {k: [float(r[k]) for r in rows] for k in rows[0]}\n\n");
    s.push_str(&format!(
        "fig, axes = plt.subplots({n}, 1, sharex=True, figsize=(8, {h}), squeeze=False)\n",
        n = panels.len(),
        h = 2.5 * panels.len() as f64 + 0.5
    ));
    for (k, p) in panels.iter().enumerate() {
        s.push_str(&format!("ax = axes[{k}][0]\n"));
        for ch in p.channels {
            s.push_str(&format!("ax.plot(col[\"t\"], col[\"{ch}\"], label=\"{ch}\", linewidth=0.8)\n"));
        }
        s.push_str(&format!("ax.set_ylabel(\"{}\")\nax.grid(True)\nax.legend(loc=\"upper right\")\n", p.ylabel));
    }
    s.push_str("axes[-1][0].set_xlabel(\"t [s]\")\nfig.suptitle(name)\nfig.tight_layout()\n");
    s.push_str("fig.savefig(os.path.join(here, name + \".png\"), dpi=150)\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(name: &str) -> TimeSeriesRecord {
        let mut r = TimeSeriesRecord::new(name, 1e-3);
        r.push(&vec![0.0; CHANNELS.len()]);
        r
    }

    fn subplot_count(script: &str) -> usize {
        let line = script.lines().find(|l| l.starts_with("fig, axes = plt.subplots(")).unwrap();
        line["fig, axes = plt.subplots(".len()..].split(',').next().unwrap().parse().unwrap()
    }

    #[test]
    fn fault_ride_through_has_two_panels() {
        let files = emit_plots(&record("s4_fault_ride_through")).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].0, "s4_fault_ride_through_plot.py");
        assert_eq!(subplot_count(&files[0].1), 2);
        assert!(files[0].1.contains("col[\"v_sa\"]") && files[0].1.contains("col[\"i_sc\"]"));
    }

    #[test]
    fn phase_jump_has_three_panels() {
        for name in ["s5_phase_jump_charging", "s5_phase_jump_discharging"] {
            let files = emit_plots(&record(name)).unwrap();
            let script = &files[0].1;
            assert_eq!(subplot_count(script), 3);
            for ch in ["i_sa", "f_s", "p_esc"] {
                assert!(script.contains(&format!("col[\"{ch}\"]")), "{ch}");
            }
        }
    }

    #[test]
    fn empty_record_is_an_error() {
        let r = TimeSeriesRecord::new("s4_fault_ride_through", 1e-3);
        assert_eq!(emit_plots(&r), Err(PlotError::EmptyRecord("s4_fault_ride_through".into())));
    }

    #[test]
    fn every_layout_uses_recorded_channels() {
        for name in super::super::presets::PRESET_NAMES {
            assert!(emit_plots(&record(name)).is_ok(), "{name}");
        }
    }
}
