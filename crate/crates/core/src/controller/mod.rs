//! Grid-forming control chain.
//!
//! Both modes share the same path: sequence separation of the terminal
//! voltage, voltage reference, virtual impedance, reference saturation,
//! mapping into the positive-sequence frame and the inner current loop.
//! They differ in what drives the virtual rotor:
//!
//! * [`ControlMode::Esc`]: an emulated synchronous condenser with zero power
//!   reference, driven by the virtual power `v_s·i_v` computed from the
//!   unsaturated virtual current, in parallel with a current source that
//!   carries `P* + P_droop`.
//! * [`ControlMode::Vsm`]: the classical virtual machine driven by the
//!   measured converter power; no current source.

pub mod avr;
pub mod current;
pub mod limiter;
pub mod reference;
pub mod sync;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::frames::{abc_to_dq, combined_park, dq_to_abc, DdsrfState, SequenceFrames, ThreePhase};
use crate::params::{ParamError, SystemParams};

pub use avr::{avr_step, AvrParams, AvrState};
pub use current::{current_control_step, CurrentControllerGains, CurrentControllerState};
pub use limiter::{limit_current, peak_bound, LimiterOutput, LimiterParams};
pub use reference::{current_source_ref, virtual_impedance, ImpedanceError, VirtualImpedanceParams};
pub use sync::{droop_power, sync_step_esc, sync_step_vsm, terminal_speed, SyncParams, SyncState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    Esc,
    Vsm,
}

impl FromStr for ControlMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "esc" => Ok(Self::Esc),
            "vsm" => Ok(Self::Vsm),
            other => Err(format!("unknown control mode `{other}` (expected esc or vsm)")),
        }
    }
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Esc => "esc",
            Self::Vsm => "vsm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSourceParams {
    pub p_ref: f64,
}

/// Everything the control chain needs, derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub sync: SyncParams,
    pub avr: AvrParams,
    pub impedance: VirtualImpedanceParams,
    pub limiter: LimiterParams,
    pub gains: CurrentControllerGains,
    pub ddsrf_cutoff: f64,
    pub v_floor: f64,
}

impl ControllerParams {
    pub fn from_system(p: &SystemParams) -> Result<Self, ParamError> {
        p.validate()?;
        let omega_base = p.omega_base();
        let impedance = VirtualImpedanceParams::symmetric(p.r_v, p.l_v).map_err(|_| {
            ParamError::OutOfRange { name: "l_v", value: p.l_v, rule: "r_v^2 + l_v^2 must be > 0" }
        })?;
        Ok(Self {
            sync: SyncParams {
                h: p.h,
                k_d: p.k_d,
                tau_lpf: p.tau_lpf,
                tau_fv: p.tau_fv,
                v_fv_min: p.v_fv_min,
                k_droop: p.k_droop,
                omega_ref: 1.0,
                omega_base,
            },
            avr: AvrParams {
                k_q: p.k_q,
                tau_v: p.tau_v,
                tau_q: p.tau_q,
                v_set_rate: 1.0 / p.v_ramp_time,
            },
            impedance,
            limiter: LimiterParams { i_lim: p.i_lim },
            gains: CurrentControllerGains::tuned(p.l_f, p.r_f, omega_base, p.cc_bandwidth_hz),
            ddsrf_cutoff: p.ddsrf_cutoff,
            v_floor: p.v_floor,
        })
    }
}

/// Converter-side measurements at the capacitor node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Measurements {
    /// Capacitor (synchronization point) voltage.
    pub v_s: ThreePhase,
    /// Converter-side inductor current.
    pub i_m: ThreePhase,
    /// Current leaving the capacitor node toward transformer and terminal load.
    pub i_s: ThreePhase,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerMeasurements {
    pub p_ac: f64,
    pub q_ac: f64,
    /// Virtual condenser power `v_sdqpn · i_v`.
    pub p_esc: f64,
    /// Power carried by the current source.
    pub p_cs: f64,
    pub p_droop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerOutput {
    pub v_mod: ThreePhase,
    pub powers: PowerMeasurements,
    pub limiter_active: bool,
    /// `|i⁺| + |i⁻|` of the saturated reference.
    pub i_ref_peak: f64,
    pub v_seq: SequenceFrames,
    pub v_star: f64,
    pub v_floor_hit: bool,
}

/// All integrator states of the control chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub sync: SyncState,
    pub avr: AvrState,
    pub ddsrf: DdsrfState,
    pub current: CurrentControllerState,
}

impl ControllerState {
    pub fn new(params: &ControllerParams, v_set: f64, theta: f64) -> Self {
        Self {
            sync: SyncState::new(1.0, theta),
            avr: AvrState::settled(v_set),
            ddsrf: DdsrfState::new(params.ddsrf_cutoff),
            current: CurrentControllerState::default(),
        }
    }
}

/// The controller: mode, parameters, setpoints and state.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub mode: ControlMode,
    pub params: ControllerParams,
    pub source: CurrentSourceParams,
    pub q_ref: f64,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(mode: ControlMode, params: ControllerParams, p_ref: f64, q_ref: f64, v_set: f64) -> Self {
        Self {
            mode,
            params,
            source: CurrentSourceParams { p_ref },
            q_ref,
            state: ControllerState::new(&params, v_set, 0.0),
        }
    }

    pub fn frequency_hz(&self) -> f64 {
        self.state.sync.frequency_hz(self.params.sync.omega_base)
    }

    /// One control period: computes the modulation voltage from the
    /// measurements and advances every internal state by `dt`.
    pub fn step(&mut self, meas: &Measurements, dt: f64) -> ControllerOutput {
        let p = &self.params;
        let st = &mut self.state;
        let theta = st.sync.theta;
        let omega_s = st.sync.omega_s;

        let v_seq = st.ddsrf.step(meas.v_s, theta, dt);
        let v_dq = abc_to_dq(meas.v_s, theta);
        let i_m_dq = abc_to_dq(meas.i_m, theta);
        let i_s_dq = abc_to_dq(meas.i_s, theta);
        let p_ac = v_dq.d * i_s_dq.d + v_dq.q * i_s_dq.q;
        let q_ac = v_dq.q * i_s_dq.d - v_dq.d * i_s_dq.q;

        let v_star = st.avr.step(v_seq.positive().norm(), q_ac, self.q_ref, &p.avr, dt);
        let i_v = virtual_impedance(&v_seq, v_star, &p.impedance);
        let p_esc = v_seq.dot(&i_v);
        let p_droop = droop_power(omega_s, &p.sync);

        let (i_unsat, p_cs, v_floor_hit) = match self.mode {
            ControlMode::Esc => {
                let cs = current_source_ref(&v_seq, self.source.p_ref + p_droop, p.v_floor);
                (i_v + cs.current, v_seq.dot(&cs.current), cs.floored)
            }
            ControlMode::Vsm => (i_v, 0.0, false),
        };
        let limited = limit_current(&i_unsat, &p.limiter);
        let i_ref_dq = combined_park(limited.current, theta);

        let v_ff = combined_park(v_seq, theta);
        let v_mod_dq = st.current.step(&p.gains, &i_ref_dq, &i_m_dq, &v_ff, omega_s, limited.active, dt);
        let v_mod = dq_to_abc(v_mod_dq);

        match self.mode {
            ControlMode::Esc => {
                let omega_v = terminal_speed(&mut st.sync, v_seq.positive(), &p.sync, dt);
                sync_step_esc(&mut st.sync, p_esc, omega_v, &p.sync, dt)
            }
            ControlMode::Vsm => sync_step_vsm(&mut st.sync, p_ac, self.source.p_ref, &p.sync, dt),
        }

        ControllerOutput {
            v_mod,
            powers: PowerMeasurements { p_ac, q_ac, p_esc, p_cs, p_droop },
            limiter_active: limited.active,
            i_ref_peak: peak_bound(&limited.current),
            v_seq,
            v_star,
            v_floor_hit,
        }
    }
}

/// Free-function form of [`Controller::step`].
pub fn controller_step(controller: &mut Controller, meas: &Measurements, dt: f64) -> ControllerOutput {
    controller.step(meas, dt)
}
