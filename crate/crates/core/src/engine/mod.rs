//! Lock-step co-simulation of controller and plant.
//!
//! The controller runs once per plant step. Events take effect at the first
//! step whose time is at or after the event time. Grid angle and frequency
//! events are folded into the grid source profile, which is evaluated
//! analytically, so they are exact to the step.

pub mod record;
pub mod scenario;

use thiserror::Error;

use crate::controller::{Controller, ControllerParams, ControllerState, Measurements};
use crate::frames::abc_to_dq;
use crate::params::ParamError;
use crate::plant::{
    Bus, FaultKind, FrequencyRamp, GridProfile, PhaseJump, Plant, PlantError, PlantParams, PlantState,
};

pub use record::{measure_settled, Divergence, RecordError, Summary, TimeSeriesRecord, CHANNELS};
pub use scenario::{Event, Scenario, ScenarioError};

/// Frequency excursion that marks a run as divergent [Hz].
pub const DIVERGENCE_FREQ_HZ: f64 = 25.0;
/// Converter current magnitude that marks a run as divergent [p.u.].
pub const DIVERGENCE_CURRENT: f64 = 10.0;
/// Length of the initialization pre-roll [s].
pub const PREROLL: f64 = 2.0;
/// Duration of the power reference ramp at the start of the pre-roll [s].
pub const PREROLL_RAMP: f64 = 0.5;
/// Allowed peak-to-peak ripple of the settled pre-roll signals [p.u.].
pub const PREROLL_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("pre-roll did not settle: {0}")]
    Initialization(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    SetPower(f64),
    FaultOn(FaultKind, f64),
    FaultOff,
    Breaker(bool),
    LoadOn(usize, Bus, f64),
    LoadOff(usize),
    VoltageTarget(f64),
}

fn build_actions(scenario: &Scenario) -> Vec<(f64, Action)> {
    let mut out = Vec::new();
    for (k, ev) in scenario.events.iter().enumerate() {
        match *ev {
            Event::SetpointStep { time, p_ref } => out.push((time, Action::SetPower(p_ref))),
            Event::Fault { start, end, fault, resistance } => {
                let r = resistance.unwrap_or(scenario.params.fault_resistance);
                out.push((start, Action::FaultOn(fault, r)));
                out.push((end, Action::FaultOff));
            }
            Event::Breaker { time, closed } => out.push((time, Action::Breaker(closed))),
            Event::Load { connect, disconnect, power, bus } => {
                out.push((connect, Action::LoadOn(k, bus, power)));
                if let Some(d) = disconnect {
                    out.push((d, Action::LoadOff(k)));
                }
            }
            Event::VoltageRamp { time, target } => out.push((time, Action::VoltageTarget(target))),
            Event::PhaseJump { .. } | Event::FrequencyRamp { .. } => {}
        }
    }
    // stable: simultaneous actions keep their declaration order
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn grid_profile(scenario: &Scenario) -> GridProfile {
    let mut profile = GridProfile::new(scenario.grid);
    for ev in &scenario.events {
        match *ev {
            Event::PhaseJump { time, degrees } => {
                profile.jumps.push(PhaseJump { time, angle: degrees.to_radians() })
            }
            Event::FrequencyRamp { time, rate, duration } => {
                profile.ramps.push(FrequencyRamp { start: time, duration, rate })
            }
            _ => {}
        }
    }
    profile
}

pub fn plant_params(scenario: &Scenario) -> PlantParams {
    let p = &scenario.params;
    PlantParams {
        l_f: p.l_f,
        r_f: p.r_f,
        c_f: p.c_f,
        x_tr: p.x_tr,
        r_tr: p.r_tr,
        omega_base: p.omega_base(),
        s_base: p.s_base,
        grid: scenario.grid,
    }
}

/// Loads currently connected, tracked so that overlapping loads add up.
#[derive(Debug, Clone, Default)]
struct LoadSet(Vec<(usize, Bus, f64)>);

impl LoadSet {
    fn total(&self, bus: Bus) -> f64 {
        self.0.iter().filter(|l| l.1 == bus).map(|l| l.2).sum()
    }
}

/// Per-sample-interval maxima.
#[derive(Debug, Clone, Copy, Default)]
struct Peaks {
    i_s: f64,
    i_m: f64,
    i_ref: f64,
}

/// Lock-step simulation of one scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: Scenario,
    pub controller: Controller,
    pub plant: Plant,
    actions: Vec<(f64, Action)>,
    next_action: usize,
    loads: LoadSet,
    steps: u64,
    t0: f64,
}

impl Simulation {
    /// Builds the simulation with states at the t = 0 operating point.
    pub fn new(scenario: Scenario) -> Result<Self, EngineError> {
        scenario.validate()?;
        let cparams = ControllerParams::from_system(&scenario.params)?;
        let profile = grid_profile(&scenario);
        let black_start = scenario.is_black_start();
        let t0 = if black_start { 0.0 } else { -PREROLL };

        let mut controller =
            Controller::new(scenario.mode, cparams, scenario.p_ref, scenario.q_ref, scenario.v_set);
        controller.state.sync.theta = crate::frames::wrap_angle(profile.phase(t0));
        let plant = Plant::new(plant_params(&scenario), profile, t0)?;
        let actions = build_actions(&scenario);
        let mut sim = Self {
            scenario,
            controller,
            plant,
            actions,
            next_action: 0,
            loads: LoadSet::default(),
            steps: 0,
            t0,
        };
        if !black_start {
            sim.preroll()?;
        }
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.scenario.dt
    }

    fn measurements(&self) -> Measurements {
        Measurements { v_s: self.plant.state.v_s, i_m: self.plant.state.i_m, i_s: self.plant.i_s() }
    }

    /// Runs from zero states with the power reference ramped up over
    /// [`PREROLL_RAMP`], then checks that the last 100 ms are flat.
    fn preroll(&mut self) -> Result<(), EngineError> {
        let dt = self.scenario.dt;
        let n = (PREROLL / dt).round() as u64;
        let p_final = self.scenario.p_ref;
        let window = (0.1 / dt).round() as u64;
        let (mut p_lo, mut p_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut v_lo, mut v_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..n {
            let frac = (k as f64 * dt / PREROLL_RAMP).min(1.0);
            self.controller.source.p_ref = p_final * frac;
            let out = self.controller.step(&self.measurements(), dt);
            self.plant.step(out.v_mod, dt)?;
            self.steps += 1;
            if k >= n - window {
                let p = out.powers.p_ac;
                let v = out.v_seq.positive().norm();
                p_lo = p_lo.min(p);
                p_hi = p_hi.max(p);
                v_lo = v_lo.min(v);
                v_hi = v_hi.max(v);
            }
        }
        self.controller.source.p_ref = p_final;
        // Grid source evaluated on the scenario clock from here on.
        self.steps = 0;
        self.t0 = 0.0;
        self.plant.time = 0.0;
        if p_hi - p_lo > PREROLL_TOLERANCE || v_hi - v_lo > PREROLL_TOLERANCE {
            return Err(EngineError::Initialization(format!(
                "{}: P_ac ripple {:.4} p.u., |v+| ripple {:.4} p.u. over the last 100 ms",
                self.scenario.name,
                p_hi - p_lo,
                v_hi - v_lo
            )));
        }
        Ok(())
    }

    fn apply_due_actions(&mut self, t: f64) {
        let tol = 1e-6 * self.scenario.dt;
        let mut topo = self.plant.topology();
        while let Some(&(time, action)) = self.actions.get(self.next_action) {
            if time > t + tol {
                break;
            }
            self.next_action += 1;
            match action {
                Action::SetPower(p) => self.controller.source.p_ref = p,
                Action::FaultOn(kind, r) => topo.fault = Some((kind, r)),
                Action::FaultOff => topo.fault = None,
                Action::Breaker(closed) => topo.breaker_closed = closed,
                Action::LoadOn(id, bus, p) => self.loads.0.push((id, bus, p)),
                Action::LoadOff(id) => self.loads.0.retain(|l| l.0 != id),
                Action::VoltageTarget(v) => self.controller.state.avr.set_target(v),
            }
        }
        topo.load_terminal = self.loads.total(Bus::Terminal);
        topo.load_grid = self.loads.total(Bus::Grid);
        self.plant.set_topology(topo);
    }

    /// Runs to the end of the scenario and returns the decimated record.
    pub fn run(mut self) -> Result<TimeSeriesRecord, EngineError> {
        let dt = self.scenario.dt;
        let decim = self.scenario.decimation() as u64;
        let total = (self.scenario.duration / dt).round() as u64;
        let f_nom = self.scenario.params.f_base;
        let mut record = TimeSeriesRecord::new(self.scenario.name.clone(), decim as f64 * dt);
        let mut peaks = Peaks::default();
        let mut row = vec![0.0; CHANNELS.len()];

        while self.steps <= total {
            let t = self.time();
            self.apply_due_actions(t);
            let meas = self.measurements();
            let theta = self.controller.state.sync.theta;
            let f_s = self.controller.frequency_hz();
            let out = self.controller.step(&meas, dt);

            peaks.i_s = peaks.i_s.max(meas.i_s.max_abs());
            peaks.i_m = peaks.i_m.max(meas.i_m.max_abs());
            peaks.i_ref = peaks.i_ref.max(out.i_ref_peak);

            let diverged = if !(f_s.is_finite() && meas.v_s.is_finite() && meas.i_m.is_finite()) {
                Some("non-finite signal".to_string())
            } else if (f_s - f_nom).abs() > DIVERGENCE_FREQ_HZ {
                Some(format!("frequency {f_s:.2} Hz outside {f_nom}±{DIVERGENCE_FREQ_HZ} Hz"))
            } else if meas.i_m.max_abs().max(meas.i_s.max_abs()) > DIVERGENCE_CURRENT {
                Some(format!("converter current above {DIVERGENCE_CURRENT} p.u."))
            } else {
                None
            };
            if let Some(reason) = diverged {
                record.divergence = Some(Divergence { time: t, reason });
                break;
            }

            if self.steps.is_multiple_of(decim) {
                let st = &self.plant.state;
                let i_g_dq = abc_to_dq(st.i_t, theta);
                let cols: [f64; 28] = [
                    t,
                    st.v_s.a,
                    st.v_s.b,
                    st.v_s.c,
                    meas.i_s.a,
                    meas.i_s.b,
                    meas.i_s.c,
                    st.v_b.a,
                    st.v_b.b,
                    st.v_b.c,
                    st.i_t.a,
                    st.i_t.b,
                    st.i_t.c,
                    f_s,
                    out.powers.p_ac,
                    out.powers.q_ac,
                    out.powers.p_cs,
                    out.powers.p_esc,
                    out.powers.p_droop,
                    if out.limiter_active { 1.0 } else { 0.0 },
                    peaks.i_s,
                    peaks.i_m,
                    peaks.i_ref,
                    out.v_seq.positive().norm(),
                    out.v_star,
                    i_g_dq.d,
                    i_g_dq.q,
                    self.plant.profile.frequency_hz(t),
                ];
                row.copy_from_slice(&cols);
                record.push(&row);
                peaks = Peaks::default();
            }

            if self.steps == total {
                break;
            }
            match self.plant.step(out.v_mod, dt) {
                Ok(()) => {}
                Err(PlantError::NonFinite { time }) => {
                    record.divergence = Some(Divergence { time, reason: "non-finite plant state".into() });
                    break;
                }
                Err(e) => return Err(e.into()),
            }
            self.steps += 1;
        }
        Ok(record)
    }
}

/// Controller and plant states at the t = 0 operating point.
pub fn initialize(scenario: &Scenario) -> Result<(ControllerState, PlantState), EngineError> {
    let sim = Simulation::new(scenario.clone())?;
    Ok((sim.controller.state, sim.plant.state))
}

pub fn run(scenario: &Scenario) -> Result<TimeSeriesRecord, EngineError> {
    Simulation::new(scenario.clone())?.run()
}
