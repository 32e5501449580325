//! System parameter set with the 2 MW battery inverter defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{default_ddsrf_cutoff, FramesError, PerUnitBase};

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} out of range: {rule}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error(transparent)]
    Base(#[from] FramesError),
}

/// Every tunable of the electrical system and the control chain.
///
/// Per-unit values refer to [`PerUnitBase`]; times are in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Rated apparent power [VA].
    pub s_base: f64,
    /// Grid-side rms line-to-line voltage [V].
    pub v_ll_grid: f64,
    /// Converter-side rms line-to-line voltage [V].
    pub v_ll_lv: f64,
    /// Nominal frequency [Hz].
    pub f_base: f64,

    pub l_f: f64,
    pub r_f: f64,
    pub c_f: f64,
    pub x_tr: f64,
    pub r_tr: f64,

    /// Inertia constant [s].
    pub h: f64,
    /// Damping factor.
    pub k_d: f64,
    /// Washout low-pass time constant [s].
    pub tau_lpf: f64,
    /// Terminal frequency filter of the condenser damping [s].
    pub tau_fv: f64,
    /// Voltage normalization floor of the terminal frequency estimate [p.u.].
    pub v_fv_min: f64,
    /// Frequency droop gain [p.u./p.u.].
    pub k_droop: f64,

    /// Virtual reactance, both sequences [p.u.].
    pub l_v: f64,
    /// Virtual resistance, both sequences [p.u.].
    pub r_v: f64,
    /// Current limit [p.u.].
    pub i_lim: f64,

    /// Reactive power droop [p.u./p.u.].
    pub k_q: f64,
    pub tau_v: f64,
    pub tau_q: f64,

    /// Floor on the positive-sequence voltage used by the current source [p.u.].
    pub v_floor: f64,
    /// Sequence separator cutoff [rad/s].
    pub ddsrf_cutoff: f64,
    /// Inner current loop bandwidth [Hz].
    pub cc_bandwidth_hz: f64,
    /// Time for the voltage setpoint to travel 0 -> 1 p.u. [s].
    pub v_ramp_time: f64,
    /// Shunt resistance of a faulted phase [p.u.].
    pub fault_resistance: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let f_base = 50.0;
        Self {
            s_base: 2.0e6,
            v_ll_grid: 20.0e3,
            v_ll_lv: 400.0,
            f_base,
            l_f: 0.12,
            r_f: 0.01,
            c_f: 0.05,
            x_tr: 0.065,
            r_tr: 0.005,
            h: 2.0,
            k_d: 100.0,
            tau_lpf: 1.0e-3,
            tau_fv: 1.0e-2,
            v_fv_min: 1.0,
            k_droop: 1.0 / 0.05,
            l_v: 0.2,
            r_v: 0.05,
            i_lim: 1.1,
            k_q: 0.1,
            tau_v: 5.0e-3,
            tau_q: 5.0e-3,
            v_floor: 0.1,
            ddsrf_cutoff: default_ddsrf_cutoff(2.0 * std::f64::consts::PI * f_base),
            cc_bandwidth_hz: 1000.0,
            v_ramp_time: 0.25,
            fault_resistance: 1.0e-3,
        }
    }
}

impl SystemParams {
    pub fn base(&self) -> Result<PerUnitBase, ParamError> {
        Ok(PerUnitBase::new(self.s_base, self.v_ll_grid, self.v_ll_lv, self.f_base)?)
    }

    pub fn omega_base(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_base
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        fn check(name: &'static str, value: f64, ok: bool, rule: &'static str) -> Result<(), ParamError> {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(ParamError::OutOfRange { name, value, rule })
            }
        }
        self.base()?;
        let pos = "must be > 0";
        let nonneg = "must be >= 0";
        check("l_f", self.l_f, self.l_f > 0.0, pos)?;
        check("c_f", self.c_f, self.c_f > 0.0, pos)?;
        check("x_tr", self.x_tr, self.x_tr > 0.0, pos)?;
        check("r_f", self.r_f, self.r_f >= 0.0, nonneg)?;
        check("r_tr", self.r_tr, self.r_tr >= 0.0, nonneg)?;
        check("h", self.h, self.h > 0.0, pos)?;
        check("k_d", self.k_d, self.k_d >= 0.0, nonneg)?;
        check("tau_lpf", self.tau_lpf, self.tau_lpf > 0.0, pos)?;
        check("tau_fv", self.tau_fv, self.tau_fv > 0.0, pos)?;
        check("v_fv_min", self.v_fv_min, self.v_fv_min > 0.0, pos)?;
        check("k_droop", self.k_droop, self.k_droop > 0.0, pos)?;
        check("l_v", self.l_v, self.l_v >= 0.0, nonneg)?;
        check("r_v", self.r_v, self.r_v >= 0.0, nonneg)?;
        check(
            "r_v",
            self.r_v,
            self.r_v * self.r_v + self.l_v * self.l_v > 0.0,
            "r_v^2 + l_v^2 must be > 0",
        )?;
        check("i_lim", self.i_lim, self.i_lim > 0.0, pos)?;
        check("k_q", self.k_q, self.k_q >= 0.0, nonneg)?;
        check("tau_v", self.tau_v, self.tau_v > 0.0, pos)?;
        check("tau_q", self.tau_q, self.tau_q > 0.0, pos)?;
        check("v_floor", self.v_floor, self.v_floor > 0.0, pos)?;
        check("ddsrf_cutoff", self.ddsrf_cutoff, self.ddsrf_cutoff > 0.0, pos)?;
        check("cc_bandwidth_hz", self.cc_bandwidth_hz, self.cc_bandwidth_hz > 0.0, pos)?;
        check("v_ramp_time", self.v_ramp_time, self.v_ramp_time > 0.0, pos)?;
        check("fault_resistance", self.fault_resistance, self.fault_resistance > 0.0, pos)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let p = SystemParams::default();
        p.validate().unwrap();
        assert_eq!(p.k_droop, 20.0);
        assert!((p.ddsrf_cutoff - 222.14).abs() < 0.01);
    }

    #[test]
    fn negative_limit_rejected() {
        let p = SystemParams { i_lim: -1.0, ..Default::default() };
        assert!(matches!(p.validate(), Err(ParamError::OutOfRange { name: "i_lim", .. })));
    }
}
