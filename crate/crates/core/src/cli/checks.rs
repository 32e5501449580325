//! Acceptance checks evaluated on recorded runs of the built-in scenarios.

use serde::{Deserialize, Serialize};

use crate::engine::{measure_settled, Event, Scenario, TimeSeriesRecord};
use crate::params::SystemParams;
use crate::plant::{Bus, FaultKind};

/// Per-phase current ceiling: the limit plus 5 % [p.u.].
pub const CURRENT_MARGIN: f64 = 1.05;
/// Sub-transient excluded after a fault inception or phase jump [s].
pub const INCEPTION_EXCLUSION: f64 = 2e-3;
/// Allowed frequency excursion for a ride-through [Hz].
pub const FREQ_BAND_HZ: f64 = 5.0;

/// One measured quantity against its acceptance bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, min: Option<f64>, max: Option<f64>) -> Self {
        let pass = value.is_finite()
            && min.is_none_or(|lo| value >= lo)
            && max.is_none_or(|hi| value <= hi);
        Self { name: name.into(), value, min, max, pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Self::new(name, value, None, Some(max))
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Self {
        Self::new(name, value, Some(min), None)
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self::new(name, value, Some(target - tol), Some(target + tol))
    }

    /// Boolean property encoded as 1 (holds) or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Some(1.0), None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub expected_divergent: bool,
    pub diverged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence_time: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ScenarioReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub scenarios: Vec<ScenarioReport>,
    pub pass: bool,
}

impl SummaryReport {
    pub fn new(scenarios: Vec<ScenarioReport>) -> Self {
        let pass = scenarios.iter().all(|s| s.pass);
        Self { scenarios, pass }
    }
}

/// Which acceptance profile applies to a scenario, from its name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    VsmInstability,
    PowerStep,
    BlackStart,
    GridDisconnection,
    FaultRideThrough,
    PhaseJumpCharging,
    PhaseJumpDischarging,
    Generic,
}

impl Profile {
    pub fn of(name: &str) -> Self {
        match name {
            "s0_vsm_instability" => Self::VsmInstability,
            "s1_power_step" => Self::PowerStep,
            "s2_black_start" => Self::BlackStart,
            "s3_grid_disconnection" => Self::GridDisconnection,
            "s4_fault_ride_through" => Self::FaultRideThrough,
            "s5_phase_jump_charging" => Self::PhaseJumpCharging,
            "s5_phase_jump_discharging" => Self::PhaseJumpDischarging,
            _ => Self::Generic,
        }
    }
}

/// Runs the checks of the scenario's profile against its record.
pub fn evaluate(scenario: &Scenario, record: &TimeSeriesRecord) -> ScenarioReport {
    let profile = Profile::of(&scenario.name);
    let expected_divergent = profile == Profile::VsmInstability;
    let mut checks = Vec::new();
    if record.is_empty() {
        checks.push(Check::holds("record_not_empty", false));
    } else {
        match profile {
            Profile::VsmInstability => vsm_instability(scenario, record, &mut checks),
            Profile::PowerStep => power_step(scenario, record, &mut checks),
            Profile::BlackStart => black_start(scenario, record, &mut checks),
            Profile::GridDisconnection => grid_disconnection(scenario, record, &mut checks),
            Profile::FaultRideThrough => fault_ride_through(scenario, record, &mut checks),
            Profile::PhaseJumpCharging => phase_jump(scenario, record, false, &mut checks),
            Profile::PhaseJumpDischarging => phase_jump(scenario, record, true, &mut checks),
            Profile::Generic => {}
        }
    }
    if !expected_divergent {
        checks.push(Check::holds("no_divergence", !record.is_divergent()));
    }
    let pass = checks.iter().all(|c| c.pass);
    ScenarioReport {
        scenario: scenario.name.clone(),
        expected_divergent,
        diverged: record.is_divergent(),
        divergence_time: record.divergence.as_ref().map(|d| d.time),
        checks,
        pass,
    }
}

fn col<'a>(record: &'a TimeSeriesRecord, name: &str) -> &'a [f64] {
    record.channel(name).expect("channel is part of the fixed layout")
}

/// Largest per-phase converter or output current over `[start, end]`.
///
/// The peak channels hold the maximum over the interval ending at each
/// sample, so a sample at `t` covers `(t - interval, t]`.
pub fn current_peak(record: &TimeSeriesRecord, start: f64, end: f64) -> f64 {
    let r = record.window(start + record.sample_interval, end);
    let i_s = &col(record, "i_s_peak")[r.clone()];
    let i_m = &col(record, "i_m_peak")[r];
    i_s.iter().chain(i_m).fold(0.0, |m, &x| m.max(x))
}

fn fault_windows(scenario: &Scenario) -> Vec<(f64, f64)> {
    scenario
        .events
        .iter()
        .filter_map(|e| match *e {
            Event::Fault { start, end, .. } => Some((start, end)),
            _ => None,
        })
        .collect()
}

fn band_exit_time(record: &TimeSeriesRecord, center: f64, band: f64) -> Option<f64> {
    let f = col(record, "f_s");
    f.iter().position(|x| (x - center).abs() > band).map(|k| record.times()[k])
}

fn vsm_instability(scenario: &Scenario, record: &TimeSeriesRecord, out: &mut Vec<Check>) {
    let limit = scenario.params.i_lim * CURRENT_MARGIN;
    let end = record.times().last().copied().unwrap_or(0.0);
    out.push(Check::at_most("current_peak", current_peak(record, 0.0, end), limit));

    let f0 = scenario.params.f_base;
    let exit = band_exit_time(record, f0, FREQ_BAND_HZ);
    out.push(Check::at_most("band_exit_time", exit.unwrap_or(f64::INFINITY), 5.0));
    let stays_out = exit.is_some_and(|t0| {
        let r = record.window(t0, end);
        col(record, "f_s")[r].iter().all(|x| (x - f0).abs() > FREQ_BAND_HZ)
    });
    out.push(Check::holds("no_band_reentry", stays_out));
    out.push(Check::holds("divergence_flagged", record.is_divergent()));
}

/// Setpoint steps as `(time, p_ref)`, starting with the initial setpoint.
fn setpoint_schedule(scenario: &Scenario) -> Vec<(f64, f64)> {
    let mut s = vec![(0.0, scenario.p_ref)];
    for e in &scenario.events {
        if let Event::SetpointStep { time, p_ref } = *e {
            s.push((time, p_ref));
        }
    }
    s
}

fn power_step(scenario: &Scenario, record: &TimeSeriesRecord, out: &mut Vec<Check>) {
    let sched = setpoint_schedule(scenario);
    let end = record.times().last().copied().unwrap_or(0.0);
    let mut esc_worst = 0.0f64;
    for (k, &(t, p_ref)) in sched.iter().enumerate().skip(1) {
        let next = sched.get(k + 1).map_or(end, |s| s.0);
        let settled = (t + 0.3, next - record.sample_interval);
        let dev = measure_settled(record, "p_ac", settled)
            .map_or(f64::INFINITY, |s| (s.max - p_ref).abs().max((s.min - p_ref).abs()));
        out.push(Check::at_most(format!("p_ac_deviation_after_step_{k}"), dev, 0.03));
        if let Ok(s) = measure_settled(record, "p_esc", settled) {
            esc_worst = esc_worst.max(s.max_abs());
        }
    }
    // the initial operating point before the first step is settled as well
    if sched.len() > 1 {
        if let Ok(s) = measure_settled(record, "p_esc", (0.0, sched[1].0 - record.sample_interval)) {
            esc_worst = esc_worst.max(s.max_abs());
        }
    }
    out.push(Check::at_most("settled_p_esc", esc_worst, 0.02));
}

/// Settled islanded operating point of the condenser feeding a balanced
/// resistive load through the transformer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IslandedOperatingPoint {
    /// Terminal (capacitor) voltage magnitude [p.u.].
    pub v_s: f64,
    /// Voltage reference behind the virtual impedance [p.u.].
    pub v_star: f64,
    /// Frequency [Hz].
    pub frequency_hz: f64,
    /// Power delivered by the current source [p.u.].
    pub p_cs: f64,
}

/// Phasor solution of the islanded converter with virtual impedance,
/// filter, transformer and a load of conductance `g_load` at the grid bus
/// (`bus = Grid`) or at the terminals.
///
/// At equilibrium the condenser exchanges no active power, so its virtual
/// current is in quadrature with the terminal voltage and the current
/// source carries the active power, which in turn fixes the droop
/// frequency. The reactive droop sets the voltage reference.
pub fn islanded_operating_point(
    p: &SystemParams,
    g_load: f64,
    bus: Bus,
    v_set: f64,
    q_ref: f64,
) -> IslandedOperatingPoint {
    use num_complex::Complex64 as C;
    let (mut v, mut w) = (v_set, 1.0);
    let (mut v_star, mut p_cs) = (v_set, 0.0);
    for _ in 0..500 {
        let y_c = C::new(0.0, w * p.c_f);
        let (y_out, y_term) = match bus {
            Bus::Grid => {
                let z = C::new(p.r_tr + if g_load > 0.0 { 1.0 / g_load } else { 1e12 }, w * p.x_tr);
                (1.0 / z, C::new(0.0, 0.0))
            }
            Bus::Terminal => (C::new(0.0, 0.0), C::new(g_load, 0.0)),
        };
        // output current measured after the capacitor
        let y_s = y_out + y_term;
        let y = y_c + y_s;
        let q = -v * v * y_s.im;
        v_star = v_set + p.k_q * (q_ref - q);
        let b = y.im;
        v = v_star / C::new(1.0 - p.l_v * b, p.r_v * b).norm();
        p_cs = y.re * v * v;
        w = 1.0 - p_cs / p.k_droop;
    }
    IslandedOperatingPoint { v_s: v, v_star, frequency_hz: w * p.f_base, p_cs }
}

fn black_start(scenario: &Scenario, record: &TimeSeriesRecord, out: &mut Vec<Check>) {
    let v = col(record, "v_pos");
    let t = record.times();
    let target = scenario
        .events
        .iter()
        .find_map(|e| match *e {
            Event::VoltageRamp { target, .. } => Some(target),
            _ => None,
        })
        .unwrap_or(scenario.v_set);
    let cross = |level: f64| v.iter().position(|&x| x >= level * target).map(|k| t[k]);
    let ramp = match (cross(0.1), cross(0.9)) {
        (Some(a), Some(b)) => (b - a) / 0.8,
        _ => f64::INFINITY,
    };
    out.push(Check::within("ramp_time", ramp, 0.25, 0.01));

    if let Some(&Event::Load { disconnect, power, bus, .. }) =
        scenario.events.iter().find(|e| matches!(e, Event::Load { .. }))
    {
        let end = disconnect.unwrap_or(scenario.duration);
        let op = islanded_operating_point(&scenario.params, power, bus, target, scenario.q_ref);
        let settled = measure_settled(record, "v_pos", (end - 0.1, end - record.sample_interval))
            .map_or(f64::NAN, |s| s.mean);
        out.push(Check::within("loaded_voltage", settled, op.v_s, 0.02));
    }
}

fn grid_disconnection(scenario: &Scenario, record: &TimeSeriesRecord, out: &mut Vec<Check>) {
    let end = scenario.duration;
    let window = (end - 0.5, end);
    let f = measure_settled(record, "f_s", window).map_or(f64::NAN, |s| s.mean);
    out.push(Check::within("settled_frequency", f, 46.75, 0.1));
    let p = measure_settled(record, "p_ac", window).map_or(f64::NAN, |s| s.mean);
    out.push(Check::within("settled_p_ac", p, 0.8, 0.03));
}

fn fault_ride_through(scenario: &Scenario, record: &TimeSeriesRecord, out: &mut Vec<Check>) {
    let limit = scenario.params.i_lim * CURRENT_MARGIN;
    let faults = fault_windows(scenario);
    let kinds: Vec<FaultKind> = scenario
        .events
        .iter()
        .filter_map(|e| match *e {
            Event::Fault { fault, .. } => Some(fault),
            _ => None,
        })
        .collect();
    let end = record.times().last().copied().unwrap_or(0.0);
    for (k, (&(start, stop), kind)) in faults.iter().zip(&kinds).enumerate() {
        let tag = format!("{}_{}", k + 1, fault_tag(*kind));
        let peak = current_peak(record, start + INCEPTION_EXCLUSION, stop);
        out.push(Check::at_most(format!("current_peak_fault_{tag}"), peak, limit));

        let pre = measure_settled(record, "p_ac", (start - 0.2, start - record.sample_interval))
            .map_or(f64::NAN, |s| s.mean);
        let until = faults.get(k + 1).map_or(end, |f| f.0 - record.sample_interval);
        out.push(Check::at_most(
            format!("recovery_time_fault_{tag}"),
            recovery_time(record, "p_ac", pre, 0.05, stop, until),
            0.5,
        ));
    }
    let f = measure_settled(record, "f_s", (0.0, end)).map_or(f64::NAN, |s| {
        (s.max - scenario.params.f_base).abs().max((s.min - scenario.params.f_base).abs())
    });
    out.push(Check::at_most("frequency_excursion_hz", f, FREQ_BAND_HZ));
}

fn fault_tag(kind: FaultKind) -> &'static str {
    match kind {
        FaultKind::SinglePhase => "1ph",
        FaultKind::TwoPhase => "2ph",
        FaultKind::TwoPhaseGround => "2phg",
        FaultKind::ThreePhase => "3ph",
    }
}

/// Time after `from` at which `channel` last left `target ± tol` before
/// `until`; zero if it never did. Infinite if still outside at `until`.
pub fn recovery_time(
    record: &TimeSeriesRecord,
    channel: &str,
    target: f64,
    tol: f64,
    from: f64,
    until: f64,
) -> f64 {
    let r = record.window(from, until);
    let t = &record.times()[r.clone()];
    let x = &col(record, channel)[r];
    match x.iter().rposition(|v| (v - target).abs() > tol) {
        None => 0.0,
        Some(k) if k + 1 == x.len() => f64::INFINITY,
        Some(k) => t[k + 1] - from,
    }
}

fn phase_jump(scenario: &Scenario, record: &TimeSeriesRecord, discharging: bool, out: &mut Vec<Check>) {
    let limit = scenario.params.i_lim * CURRENT_MARGIN;
    let jump = scenario
        .events
        .iter()
        .find_map(|e| match *e {
            Event::PhaseJump { time, .. } => Some(time),
            _ => None,
        })
        .unwrap_or(0.0);
    let end = record.times().last().copied().unwrap_or(0.0);
    let peak = current_peak(record, 0.0, jump).max(current_peak(record, jump + INCEPTION_EXCLUSION, end));
    out.push(Check::at_most("current_peak", peak, limit));
    if discharging {
        let p = measure_settled(record, "p_esc", (jump, end)).map_or(f64::NAN, |s| s.max);
        out.push(Check::within("p_esc_peak", p, 4.0, 1.0));
    } else {
        let p0 = measure_settled(record, "p_ac", (jump - 0.1, jump - record.sample_interval))
            .map_or(f64::NAN, |s| s.mean);
        let r = record.window(jump + record.sample_interval, jump + 0.1);
        let t = &record.times()[r.clone()];
        let reversal = col(record, "p_ac")[r]
            .iter()
            .position(|&p| p * p0 < 0.0)
            .map_or(f64::INFINITY, |k| t[k] - jump);
        out.push(Check::at_most("p_ac_sign_reversal_time", reversal, 0.1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::CHANNELS;

    #[test]
    fn check_bounds() {
        assert!(Check::within("x", 1.02, 1.0, 0.03).pass);
        assert!(!Check::within("x", 1.04, 1.0, 0.03).pass);
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(Check::holds("x", true).pass);
        assert!(!Check::holds("x", false).pass);
    }

    #[test]
    fn recovery_time_of_a_step() {
        let mut r = TimeSeriesRecord::new("x", 1e-3);
        let k_p = CHANNELS.iter().position(|c| *c == "p_ac").unwrap();
        for k in 0..1000 {
            let t = k as f64 * 1e-3;
            let mut row = vec![0.0; CHANNELS.len()];
            row[0] = t;
            row[k_p] = if t < 0.3 { 0.0 } else { 0.5 };
            r.push(&row);
        }
        let rt = recovery_time(&r, "p_ac", 0.5, 0.05, 0.1, 0.9);
        assert!((rt - 0.2).abs() < 1e-9, "{rt}");
        assert_eq!(recovery_time(&r, "p_ac", 0.5, 0.05, 0.5, 0.9), 0.0);
        assert_eq!(recovery_time(&r, "p_ac", 0.0, 0.05, 0.5, 0.9), f64::INFINITY);
    }

    #[test]
    fn islanded_point_without_load_is_no_load_voltage() {
        let p = SystemParams::default();
        let op = islanded_operating_point(&p, 0.0, Bus::Grid, 1.0, 0.0);
        // capacitor only: v = V*/|1 - X_v·B_c + j·R_v·B_c|
        let expected = 1.0 / (1.0 - p.l_v * p.c_f).hypot(p.r_v * p.c_f);
        assert!((op.v_s - expected).abs() < 1e-6, "{}", op.v_s);
        assert!((op.frequency_hz - 50.0).abs() < 1e-6);
    }
}
