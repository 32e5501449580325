//! Built-in scenarios.

use crate::controller::ControlMode;
use crate::engine::{Event, Scenario};
use crate::plant::{Bus, FaultKind};

pub const PRESET_NAMES: &[&str] = &[
    "s0_vsm_instability",
    "s1_power_step",
    "s2_black_start",
    "s3_grid_disconnection",
    "s4_fault_ride_through",
    "s5_phase_jump_charging",
    "s5_phase_jump_discharging",
];

/// Classical VSM, 1φ fault with current limiting at P* = 0.5.
pub fn s0_vsm_instability() -> Scenario {
    let mut s = Scenario::new("s0_vsm_instability", ControlMode::Vsm, 6.5);
    s.grid.scl = 40e6;
    s.p_ref = 0.5;
    s.events.push(Event::Fault { start: 2.0, end: 6.0, fault: FaultKind::SinglePhase, resistance: None });
    s
}

/// 0.5 → 1.0 p.u. at 2 s, reversal to -1.0 p.u. at 2.5 s on a 400 MVA grid.
pub fn s1_power_step() -> Scenario {
    let mut s = Scenario::new("s1_power_step", ControlMode::Esc, 3.5);
    s.grid.scl = 400e6;
    s.p_ref = 0.5;
    s.events.push(Event::SetpointStep { time: 2.0, p_ref: 1.0 });
    s.events.push(Event::SetpointStep { time: 2.5, p_ref: -1.0 });
    s
}

/// Energization of a dead island in 250 ms, 1 p.u. resistive load on
/// the grid bus between 1 s and 1.5 s.
pub fn s2_black_start() -> Scenario {
    let mut s = Scenario::new("s2_black_start", ControlMode::Esc, 2.5);
    s.grid.connected = false;
    s.v_set = 0.0;
    s.events.push(Event::VoltageRamp { time: 0.0, target: 1.0 });
    s.events.push(Event::Load { connect: 1.0, disconnect: Some(1.5), power: 1.0, bus: Bus::Grid });
    s
}

/// Charging at -0.5 p.u., 0.8 p.u. terminal load at 1.5 s, islanding at 3 s.
pub fn s3_grid_disconnection() -> Scenario {
    let mut s = Scenario::new("s3_grid_disconnection", ControlMode::Esc, 6.0);
    s.grid.scl = 400e6;
    s.p_ref = -0.5;
    s.events.push(Event::Load { connect: 1.5, disconnect: None, power: 0.8, bus: Bus::Terminal });
    s.events.push(Event::Breaker { time: 3.0, closed: false });
    s
}

/// Four 1 s faults on a 40 MVA grid.
pub fn s4_fault_ride_through() -> Scenario {
    let mut s = Scenario::new("s4_fault_ride_through", ControlMode::Esc, 9.0);
    s.grid.scl = 40e6;
    s.p_ref = 0.5;
    for (start, fault) in [
        (1.0, FaultKind::SinglePhase),
        (3.0, FaultKind::TwoPhase),
        (5.0, FaultKind::TwoPhaseGround),
        (7.0, FaultKind::ThreePhase),
    ] {
        s.events.push(Event::Fault { start, end: start + 1.0, fault, resistance: None });
    }
    s
}

fn s5(name: &str, p_ref: f64) -> Scenario {
    let mut s = Scenario::new(name, ControlMode::Esc, 4.0);
    s.grid.scl = 4e6;
    s.p_ref = p_ref;
    s.events.push(Event::PhaseJump { time: 1.0, degrees: -80.0 });
    s.events.push(Event::FrequencyRamp { time: 1.0, rate: -2.0, duration: 1.0 });
    s
}

/// -80° phase jump followed by a -2 Hz/s ramp on a 4 MVA grid, charging.
pub fn s5_phase_jump_charging() -> Scenario {
    s5("s5_phase_jump_charging", -0.9)
}

/// Same disturbance while discharging.
pub fn s5_phase_jump_discharging() -> Scenario {
    s5("s5_phase_jump_discharging", 0.9)
}

pub fn preset(name: &str) -> Option<Scenario> {
    Some(match name {
        "s0" | "s0_vsm_instability" => s0_vsm_instability(),
        "s1" | "s1_power_step" => s1_power_step(),
        "s2" | "s2_black_start" => s2_black_start(),
        "s3" | "s3_grid_disconnection" => s3_grid_disconnection(),
        "s4" | "s4_fault_ride_through" => s4_fault_ride_through(),
        "s5a" | "s5_phase_jump_charging" => s5_phase_jump_charging(),
        "s5b" | "s5_phase_jump_discharging" => s5_phase_jump_discharging(),
        _ => return None,
    })
}

pub fn all() -> Vec<Scenario> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("listed preset exists")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in all() {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
        assert!(preset("s9").is_none());
    }
}
