//! Thevenin grid source: magnitude, phase jumps and frequency ramps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::frames::ThreePhase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Short-circuit level [VA].
    pub scl: f64,
    pub x_r_ratio: f64,
    /// Source peak phase voltage [p.u.].
    pub magnitude: f64,
    /// Phase at t = 0 [rad].
    pub phase_offset: f64,
    /// Frequency before any ramp [Hz].
    pub frequency_hz: f64,
    pub connected: bool,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            scl: 400.0e6,
            x_r_ratio: 10.0,
            magnitude: 1.0,
            phase_offset: 0.0,
            frequency_hz: 50.0,
            connected: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseJump {
    pub time: f64,
    /// Angle step [rad].
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRamp {
    pub start: f64,
    pub duration: f64,
    /// Slope [Hz/s].
    pub rate: f64,
}

impl FrequencyRamp {
    fn delta_f(&self, t: f64) -> f64 {
        self.rate * (t - self.start).clamp(0.0, self.duration)
    }

    /// `∫₀ᵗ Δf dτ` for `t ≥ 0` (zero before the ramp starts).
    fn delta_phase_cycles(&self, t: f64) -> f64 {
        let s = t - self.start;
        if s <= 0.0 {
            0.0
        } else if s <= self.duration {
            0.5 * self.rate * s * s
        } else {
            let d = self.duration;
            0.5 * self.rate * d * d + self.rate * d * (s - d)
        }
    }
}

/// Grid source parameters together with its scheduled angle/frequency events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    pub params: GridParams,
    pub jumps: Vec<PhaseJump>,
    pub ramps: Vec<FrequencyRamp>,
}

impl GridProfile {
    pub fn new(params: GridParams) -> Self {
        Self { params, jumps: Vec::new(), ramps: Vec::new() }
    }

    pub fn frequency_hz(&self, t: f64) -> f64 {
        self.params.frequency_hz + self.ramps.iter().map(|r| r.delta_f(t)).sum::<f64>()
    }

    /// Accumulated source angle `∫2πf dt + offset + jumps` [rad].
    pub fn phase(&self, t: f64) -> f64 {
        let cycles = self.params.frequency_hz * t
            + self.ramps.iter().map(|r| r.delta_phase_cycles(t)).sum::<f64>();
        let jumps: f64 = self.jumps.iter().filter(|j| t >= j.time).map(|j| j.angle).sum();
        2.0 * PI * cycles + self.params.phase_offset + jumps
    }

    pub fn voltage(&self, t: f64) -> ThreePhase {
        ThreePhase::balanced(self.params.magnitude, self.phase(t))
    }
}

pub fn grid_voltage(t: f64, profile: &GridProfile) -> ThreePhase {
    profile.voltage(t)
}

/// Thevenin impedance of a grid of short-circuit level `scl`, returned as
/// `(r, x)` in p.u. of `s_base`. An infinite `scl` gives an ideal bus.
pub fn scl_to_impedance(scl: f64, s_base: f64, x_r: f64) -> (f64, f64) {
    let z = s_base / scl;
    let r = z / (1.0 + x_r * x_r).sqrt();
    (r, r * x_r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn impedance_from_scl() {
        let (r, x) = scl_to_impedance(400e6, 2e6, 10.0);
        assert_abs_diff_eq!(r.hypot(x), 0.005, epsilon = 1e-15);
        assert_abs_diff_eq!(x / r, 10.0, epsilon = 1e-12);
        let (r, x) = scl_to_impedance(4e6, 2e6, 10.0);
        assert_abs_diff_eq!(r.hypot(x), 0.5, epsilon = 1e-15);
        assert_eq!(scl_to_impedance(f64::INFINITY, 2e6, 10.0), (0.0, 0.0));
    }

    #[test]
    fn constant_frequency_phase() {
        let g = GridProfile::new(GridParams::default());
        for &t in &[0.0, 0.013, 1.7] {
            assert_abs_diff_eq!(g.phase(t), 2.0 * PI * 50.0 * t, epsilon = 1e-12);
        }
        let v = g.voltage(0.0);
        assert_abs_diff_eq!(v.a, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn phase_jump_is_a_step() {
        let mut g = GridProfile::new(GridParams::default());
        g.jumps.push(PhaseJump { time: 1.0, angle: (-80.0f64).to_radians() });
        let before = g.phase(1.0 - 1e-9);
        let after = g.phase(1.0);
        assert_abs_diff_eq!(after - before, (-80.0f64).to_radians(), epsilon = 1e-6);
    }

    #[test]
    fn rocof_ramp_reaches_48_hz() {
        let mut g = GridProfile::new(GridParams::default());
        g.ramps.push(FrequencyRamp { start: 1.0, duration: 1.0, rate: -2.0 });
        assert_eq!(g.frequency_hz(0.5), 50.0);
        assert_abs_diff_eq!(g.frequency_hz(1.5), 49.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.frequency_hz(3.0), 48.0, epsilon = 1e-12);
        // phase is the integral of frequency: compare with a fine Riemann sum
        let dt = 1e-5;
        let mut acc = 0.0;
        let mut t = 0.0;
        while t < 2.5 - 1e-12 {
            acc += 2.0 * PI * g.frequency_hz(t + 0.5 * dt) * dt;
            t += dt;
        }
        assert_abs_diff_eq!(g.phase(2.5), acc, epsilon = 1e-6);
    }
}
