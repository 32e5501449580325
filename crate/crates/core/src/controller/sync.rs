//! Swing-equation synchronization and frequency droop.

use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::frames::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncParams {
    /// Inertia constant [s].
    pub h: f64,
    /// Damping factor acting through the washout.
    pub k_d: f64,
    /// Washout low-pass time constant [s].
    pub tau_lpf: f64,
    /// Low-pass time constant of the terminal frequency seen by the
    /// condenser damping [s].
    pub tau_fv: f64,
    /// Voltage magnitude below which the terminal angle rate is scaled down
    /// instead of normalized [p.u.].
    pub v_fv_min: f64,
    pub k_droop: f64,
    /// Nominal speed [p.u.].
    pub omega_ref: f64,
    /// Base angular frequency [rad/s].
    pub omega_base: f64,
}

/// Rotor speed, angle and washout filter of the virtual machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncState {
    /// Speed [p.u.].
    pub omega_s: f64,
    /// Angle [rad], kept in `[0, 2π)`.
    pub theta: f64,
    /// Low-pass estimate of the speed deviation used by the washout.
    pub washout_lpf: f64,
    /// Positive-sequence terminal voltage of the previous step, in the rotor
    /// frame.
    pub v_prev: Complex64,
}

impl SyncState {
    pub fn new(omega_s: f64, theta: f64) -> Self {
        Self {
            omega_s,
            theta: wrap_angle(theta),
            washout_lpf: 0.0,
            v_prev: Complex64::new(0.0, 0.0),
        }
    }

    /// Synthesized frequency [Hz].
    pub fn frequency_hz(&self, omega_base: f64) -> f64 {
        self.omega_s * omega_base / (2.0 * std::f64::consts::PI)
    }

    /// `K_D·Δω·(1 - LPF)`: zero once the speed has been constant for a few
    /// washout time constants.
    pub fn damping_power(&self, params: &SyncParams) -> f64 {
        params.k_d * ((self.omega_s - params.omega_ref) - self.washout_lpf)
    }

    /// Speed derivative [p.u./s] for a given net accelerating power.
    pub fn acceleration(&self, drive: f64, params: &SyncParams) -> f64 {
        (drive - self.damping_power(params)) / (2.0 * params.h)
    }

    fn integrate(&mut self, drive: f64, tracked: f64, tau: f64, params: &SyncParams, dt: f64) {
        let accel = self.acceleration(drive, params);
        let alpha = 1.0 - (-dt / tau).exp();
        self.washout_lpf += alpha * ((tracked - params.omega_ref) - self.washout_lpf);
        self.omega_s += accel * dt;
        self.theta = wrap_angle(self.theta + self.omega_s * params.omega_base * dt);
    }
}

/// `k_droop·(ω* - ω_s)`.
pub fn droop_power(omega_s: f64, params: &SyncParams) -> f64 {
    params.k_droop * (params.omega_ref - omega_s)
}

/// Speed at which the droop delivers `p` [p.u.].
pub fn droop_equilibrium_speed(p: f64, params: &SyncParams) -> f64 {
    params.omega_ref - p / params.k_droop
}

/// Speed of the terminal voltage phasor [p.u.]: rotor speed plus the angle
/// rate of `v_pos` in the rotor frame since the previous call.
pub fn terminal_speed(state: &mut SyncState, v_pos: Complex64, params: &SyncParams, dt: f64) -> f64 {
    let prev = std::mem::replace(&mut state.v_prev, v_pos);
    let cross = prev.re * v_pos.im - prev.im * v_pos.re;
    let norm = v_pos.norm_sqr().max(params.v_fv_min * params.v_fv_min);
    state.omega_s + cross / norm / (params.omega_base * dt)
}

/// Condenser mode: the reference power is zero and the machine is driven by
/// the virtual power `p_esc`. Damping acts on the rotor speed relative to
/// the filtered speed of the terminal voltage `omega_v`, so it vanishes once
/// the machine turns with the grid at any frequency.
pub fn sync_step_esc(state: &mut SyncState, p_esc: f64, omega_v: f64, params: &SyncParams, dt: f64) {
    state.integrate(-p_esc, omega_v, params.tau_fv, params, dt);
}

/// Classical virtual synchronous machine driven by the measured power.
pub fn sync_step_vsm(state: &mut SyncState, p_ac: f64, p_ref: f64, params: &SyncParams, dt: f64) {
    let p_star = p_ref + droop_power(state.omega_s, params);
    let w = state.omega_s;
    state.integrate(p_star - p_ac, w, params.tau_lpf, params, dt);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> SyncParams {
        SyncParams {
            h: 2.0,
            k_d: 100.0,
            tau_lpf: 1e-3,
            tau_fv: 1e-2,
            v_fv_min: 1.0,
            k_droop: 20.0,
            omega_ref: 1.0,
            omega_base: 2.0 * std::f64::consts::PI * 50.0,
        }
    }

    #[test]
    fn droop_values() {
        let p = params();
        assert_eq!(droop_power(1.0, &p), 0.0);
        assert_abs_diff_eq!(droop_power(0.95, &p), 1.0, epsilon = 1e-12);
        let w = droop_equilibrium_speed(1.3, &p);
        assert_abs_diff_eq!(w, 0.935, epsilon = 1e-12);
        let st = SyncState::new(w, 0.0);
        assert_abs_diff_eq!(st.frequency_hz(p.omega_base), 46.75, epsilon = 1e-9);
    }

    #[test]
    fn esc_equilibrium_and_acceleration() {
        let p = params();
        let mut st = SyncState::new(1.0, 0.0);
        assert_eq!(st.acceleration(0.0, &p), 0.0);
        // drive = -p_esc = +0.1 → 0.1 / (2·2)
        assert_abs_diff_eq!(st.acceleration(0.1, &p), 0.025, epsilon = 1e-15);
        sync_step_esc(&mut st, 0.0, 1.0, &p, 20e-6);
        assert_eq!(st.omega_s, 1.0);
    }

    #[test]
    fn vsm_initial_acceleration() {
        let p = params();
        let st = SyncState::new(1.0, 0.0);
        let drive = 0.5 + droop_power(1.0, &p) - 0.0;
        assert_abs_diff_eq!(st.acceleration(drive, &p), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn washout_decays_with_time_constant() {
        let p = params();
        let mut st = SyncState::new(1.01, 0.0);
        // hold the speed constant and watch the washout output
        let dt = 1e-6;
        let d0 = st.damping_power(&p);
        for _ in 0..1000 {
            let w = st.omega_s;
            st.integrate(0.0, w, p.tau_lpf, &SyncParams { h: 1e12, ..p }, dt);
            st.omega_s = w;
        }
        let d1 = st.damping_power(&p);
        assert_abs_diff_eq!(d1 / d0, (-1.0f64).exp(), epsilon = 1e-3);
    }

    #[test]
    fn angle_advances_and_wraps() {
        let p = params();
        let mut st = SyncState::new(1.0, 0.0);
        for _ in 0..1000 {
            sync_step_esc(&mut st, 0.0, 1.0, &p, 20e-6);
        }
        // 20 ms = one full cycle
        let err = st.theta.min(2.0 * std::f64::consts::PI - st.theta);
        assert!(err < 1e-9, "theta = {}", st.theta);
    }

    #[test]
    fn terminal_speed_tracks_rotating_phasor() {
        let p = params();
        let dt = 20e-6;
        let mut st = SyncState::new(1.0, 0.0);
        // grid at 49 Hz seen from a rotor at 50 Hz: slip of -0.02 p.u.
        let slip = -0.02 * p.omega_base;
        let mut w = 0.0;
        for k in 0..100 {
            w = terminal_speed(&mut st, Complex64::from_polar(1.0, slip * k as f64 * dt), &p, dt);
        }
        assert_abs_diff_eq!(w, 0.98, epsilon = 1e-9);
    }

    #[test]
    fn esc_damping_vanishes_off_nominal() {
        // rotor and terminal both at 0.98 p.u.: no damping torque once settled
        let p = params();
        let mut st = SyncState::new(0.98, 0.0);
        for _ in 0..100_000 {
            sync_step_esc(&mut st, 0.0, 0.98, &p, 20e-6);
        }
        assert_abs_diff_eq!(st.damping_power(&p), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(st.omega_s, 0.98, epsilon = 1e-12);
    }
}
