//! Voltage reference with reactive-power droop.
//!
//! `V* = LPF_τv( V_set + k_q·(Q* - LPF_τq(Q)) )`, clamped to `[0, 1.5]`.
//! The voltage setpoint itself moves toward its target with a bounded slew
//! rate, which is how energization ramps are produced.

use serde::{Deserialize, Serialize};

pub const V_STAR_MAX: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvrParams {
    pub k_q: f64,
    pub tau_v: f64,
    pub tau_q: f64,
    /// Maximum slew of the voltage setpoint [p.u./s].
    pub v_set_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvrState {
    /// Measured positive-sequence magnitude filtered with τ_v (monitoring).
    pub v_meas: f64,
    /// Reactive power filtered with τ_q.
    pub q_filt: f64,
    /// Rate-limited voltage setpoint actually in use.
    pub v_set: f64,
    /// Setpoint the rate limiter is heading to.
    pub v_set_target: f64,
    /// Output voltage reference.
    pub v_star: f64,
}

impl AvrState {
    /// Settled state at setpoint `v_set` with no reactive power.
    pub fn settled(v_set: f64) -> Self {
        Self {
            v_meas: v_set,
            q_filt: 0.0,
            v_set,
            v_set_target: v_set,
            v_star: v_set.clamp(0.0, V_STAR_MAX),
        }
    }

    pub fn set_target(&mut self, target: f64) {
        self.v_set_target = target;
    }

    pub fn step(&mut self, v_mag: f64, q_ac: f64, q_ref: f64, params: &AvrParams, dt: f64) -> f64 {
        let max_step = params.v_set_rate * dt;
        self.v_set += (self.v_set_target - self.v_set).clamp(-max_step, max_step);

        let a_q = 1.0 - (-dt / params.tau_q).exp();
        let a_v = 1.0 - (-dt / params.tau_v).exp();
        self.q_filt += a_q * (q_ac - self.q_filt);
        self.v_meas += a_v * (v_mag - self.v_meas);

        let target = self.v_set + params.k_q * (q_ref - self.q_filt);
        self.v_star += a_v * (target - self.v_star);
        self.v_star = self.v_star.clamp(0.0, V_STAR_MAX);
        self.v_star
    }
}

pub fn avr_step(
    state: &mut AvrState,
    v_mag: f64,
    q_ac: f64,
    q_ref: f64,
    params: &AvrParams,
    dt: f64,
) -> f64 {
    state.step(v_mag, q_ac, q_ref, params, dt)
}
