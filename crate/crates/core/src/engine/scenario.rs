//! Scenario description: operating point, grid, control mode and event
//! timeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::ControlMode;
use crate::params::{ParamError, SystemParams};
use crate::plant::{Bus, FaultKind, GridParams};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("time step must be in (0, 1 ms], got {0}")]
    BadStep(f64),
    #[error("duration {duration} s must exceed the last event time {last} s")]
    TooShort { duration: f64, last: f64 },
    #[error("events are not sorted by time (event {index} at {time} s)")]
    Unsorted { index: usize, time: f64 },
    #[error("event {index}: {reason}")]
    BadEvent { index: usize, reason: String },
    #[error("grid short-circuit level must be > 0, got {0}")]
    BadScl(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// A timed change to the simulated system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// New active power setpoint [p.u.].
    SetpointStep { time: f64, p_ref: f64 },
    /// Shunt fault at the grid bus between `start` and `end`.
    Fault {
        start: f64,
        end: f64,
        fault: FaultKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resistance: Option<f64>,
    },
    /// Opens (`closed = false`) or closes the grid breaker.
    Breaker { time: f64, closed: bool },
    /// Balanced resistive load drawing `power` at 1 p.u. voltage.
    Load {
        connect: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        disconnect: Option<f64>,
        power: f64,
        bus: Bus,
    },
    /// Grid source angle step [deg].
    PhaseJump { time: f64, degrees: f64 },
    /// Linear grid frequency ramp [Hz/s] lasting `duration` seconds.
    FrequencyRamp { time: f64, rate: f64, duration: f64 },
    /// New voltage setpoint, reached through the setpoint rate limit.
    VoltageRamp { time: f64, target: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::SetpointStep { time, .. }
            | Event::Breaker { time, .. }
            | Event::PhaseJump { time, .. }
            | Event::FrequencyRamp { time, .. }
            | Event::VoltageRamp { time, .. } => time,
            Event::Fault { start, .. } => start,
            Event::Load { connect, .. } => connect,
        }
    }

    /// Latest instant at which this event changes anything.
    pub fn last_time(&self) -> f64 {
        match *self {
            Event::Fault { end, .. } => end,
            Event::Load { connect, disconnect, .. } => disconnect.unwrap_or(connect),
            Event::FrequencyRamp { time, duration, .. } => time + duration,
            other => other.time(),
        }
    }

    fn validate(&self, index: usize) -> Result<(), ScenarioError> {
        let bad = |reason: &str| Err(ScenarioError::BadEvent { index, reason: reason.to_string() });
        if !self.time().is_finite() || self.time() < 0.0 {
            return bad("event time must be finite and >= 0");
        }
        match *self {
            Event::Fault { start, end, resistance, .. } => {
                if !(start < end) {
                    return bad("fault start must precede its end");
                }
                if let Some(r) = resistance {
                    if !(r > 0.0) {
                        return bad("fault resistance must be > 0");
                    }
                }
            }
            Event::Load { connect, disconnect, power, .. } => {
                if !(power >= 0.0) {
                    return bad("load power must be >= 0");
                }
                if let Some(d) = disconnect {
                    if !(d > connect) {
                        return bad("load disconnect must follow its connection");
                    }
                }
            }
            Event::FrequencyRamp { duration, rate, .. } => {
                if !(duration >= 0.0) || !rate.is_finite() {
                    return bad("frequency ramp needs a finite rate and duration >= 0");
                }
            }
            Event::SetpointStep { p_ref, .. } => {
                if !(p_ref.abs() <= 1.0) {
                    return bad("active power setpoint must be within [-1, 1]");
                }
            }
            Event::VoltageRamp { target, .. } => {
                if !(0.0..=1.5).contains(&target) {
                    return bad("voltage target must be within [0, 1.5]");
                }
            }
            Event::PhaseJump { degrees, .. } => {
                if !degrees.is_finite() {
                    return bad("phase jump must be finite");
                }
            }
            Event::Breaker { .. } => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub dt: f64,
    pub mode: ControlMode,
    pub p_ref: f64,
    pub q_ref: f64,
    pub v_set: f64,
    pub grid: GridParams,
    pub params: SystemParams,
    pub events: Vec<Event>,
    /// Sample interval of the recorded channels [s].
    pub record_interval: f64,
}

impl Scenario {
    pub const DEFAULT_DT: f64 = 20e-6;
    pub const DEFAULT_RECORD_INTERVAL: f64 = 1e-3;

    pub fn new(name: impl Into<String>, mode: ControlMode, duration: f64) -> Self {
        Self {
            name: name.into(),
            duration,
            dt: Self::DEFAULT_DT,
            mode,
            p_ref: 0.0,
            q_ref: 0.0,
            v_set: 1.0,
            grid: GridParams::default(),
            params: SystemParams::default(),
            events: Vec::new(),
            record_interval: Self::DEFAULT_RECORD_INTERVAL,
        }
    }

    /// Starts from a dead, islanded network.
    pub fn is_black_start(&self) -> bool {
        !self.grid.connected && self.v_set == 0.0
    }

    /// Plant steps per recorded sample.
    pub fn decimation(&self) -> usize {
        ((self.record_interval / self.dt).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.dt > 0.0 && self.dt <= 1e-3) {
            return Err(ScenarioError::BadStep(self.dt));
        }
        self.params.validate()?;
        if !(self.grid.scl > 0.0) {
            return Err(ScenarioError::BadScl(self.grid.scl));
        }
        let mut last = 0.0f64;
        let mut prev = f64::NEG_INFINITY;
        for (index, ev) in self.events.iter().enumerate() {
            ev.validate(index)?;
            if ev.time() < prev {
                return Err(ScenarioError::Unsorted { index, time: ev.time() });
            }
            prev = ev.time();
            last = last.max(ev.last_time());
        }
        if !(self.duration > last) {
            return Err(ScenarioError::TooShort { duration: self.duration, last });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut s = Scenario::new("x", ControlMode::Esc, 2.0);
        s.validate().unwrap();
        s.events.push(Event::SetpointStep { time: 1.5, p_ref: 1.0 });
        s.events.push(Event::SetpointStep { time: 1.0, p_ref: 0.5 });
        assert!(matches!(s.validate(), Err(ScenarioError::Unsorted { index: 1, .. })));
        s.events.pop();
        s.events.push(Event::Fault { start: 1.6, end: 2.5, fault: FaultKind::ThreePhase, resistance: None });
        assert!(matches!(s.validate(), Err(ScenarioError::TooShort { .. })));
        s.events.pop();
        s.events.push(Event::Fault { start: 1.6, end: 1.6, fault: FaultKind::ThreePhase, resistance: None });
        assert!(matches!(s.validate(), Err(ScenarioError::BadEvent { index: 1, .. })));
        s.dt = 0.0;
        assert_eq!(s.validate(), Err(ScenarioError::BadStep(0.0)));
    }

    #[test]
    fn decimation_for_default_rates() {
        let s = Scenario::new("x", ControlMode::Esc, 1.0);
        assert_eq!(s.decimation(), 50);
    }
}
