//! Joint positive/negative sequence current reference saturation.
//!
//! A phase current built from `i⁺` and `i⁻` traces an ellipse in the αβ
//! plane whose semi-major axis is `|i⁺| + |i⁻|`; no phase can exceed it.
//! Both sequence vectors are scaled by the same factor so that this bound
//! stays within `i_lim`, which keeps the ellipse shape and orientation.

use serde::{Deserialize, Serialize};

use crate::frames::SequenceFrames;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimiterParams {
    pub i_lim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterOutput {
    pub current: SequenceFrames,
    /// Common scale factor in `(0, 1]`.
    pub scale: f64,
    pub active: bool,
}

/// Upper bound of the instantaneous peak of any phase, `|i⁺| + |i⁻|`.
pub fn peak_bound(i: &SequenceFrames) -> f64 {
    i.positive().norm() + i.negative().norm()
}

pub fn limit_current(i_ref: &SequenceFrames, params: &LimiterParams) -> LimiterOutput {
    let peak = peak_bound(i_ref);
    if peak <= params.i_lim {
        return LimiterOutput { current: *i_ref, scale: 1.0, active: false };
    }
    let scale = params.i_lim / peak;
    LimiterOutput { current: i_ref.scale(scale), scale, active: true }
}
