//! Current references: quasi-stationary virtual impedance per sequence and
//! the active-power current source.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::SequenceFrames;

#[derive(Debug, Error, PartialEq)]
pub enum ImpedanceError {
    #[error("{sequence}-sequence virtual impedance is zero (r = {r}, x = {x})")]
    Degenerate { sequence: &'static str, r: f64, x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualImpedanceParams {
    r_vp: f64,
    x_vp: f64,
    r_vn: f64,
    x_vn: f64,
}

impl VirtualImpedanceParams {
    pub fn new(r_vp: f64, x_vp: f64, r_vn: f64, x_vn: f64) -> Result<Self, ImpedanceError> {
        let ok = |r: f64, x: f64| r * r + x * x > 0.0 && r.is_finite() && x.is_finite();
        if !ok(r_vp, x_vp) {
            return Err(ImpedanceError::Degenerate { sequence: "positive", r: r_vp, x: x_vp });
        }
        if !ok(r_vn, x_vn) {
            return Err(ImpedanceError::Degenerate { sequence: "negative", r: r_vn, x: x_vn });
        }
        Ok(Self { r_vp, x_vp, r_vn, x_vn })
    }

    /// Same impedance on both sequences.
    pub fn symmetric(r: f64, x: f64) -> Result<Self, ImpedanceError> {
        Self::new(r, x, r, x)
    }

    pub fn positive(&self) -> (f64, f64) {
        (self.r_vp, self.x_vp)
    }

    pub fn negative(&self) -> (f64, f64) {
        (self.r_vn, self.x_vn)
    }
}

/// Virtual current drawn by an internal source `V*∠0` (positive sequence)
/// and a short circuit (negative sequence) behind the virtual impedance.
///
/// The negative-sequence matrix carries the reactance with the opposite
/// sign because that frame rotates backwards.
pub fn virtual_impedance(
    v_s: &SequenceFrames,
    v_star: f64,
    params: &VirtualImpedanceParams,
) -> SequenceFrames {
    let (r, x) = (params.r_vp, params.x_vp);
    let z2 = r * r + x * x;
    let ed = v_star - v_s.dp;
    let eq = -v_s.qp;
    let dp = (r * ed + x * eq) / z2;
    let qp = (-x * ed + r * eq) / z2;

    let (r, x) = (params.r_vn, params.x_vn);
    let z2 = r * r + x * x;
    let ed = -v_s.dn;
    let eq = -v_s.qn;
    let dn = (r * ed - x * eq) / z2;
    let qn = (x * ed + r * eq) / z2;
    SequenceFrames::new(dp, qp, dn, qn)
}

/// Output of [`current_source_ref`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentSourceOutput {
    pub current: SequenceFrames,
    /// Set when `|v⁺|` fell below the floor and the denominator was clamped.
    pub floored: bool,
}

/// Positive-sequence current in phase with the voltage carrying `p_total`.
pub fn current_source_ref(v_s: &SequenceFrames, p_total: f64, v_floor: f64) -> CurrentSourceOutput {
    let mag2 = v_s.dp * v_s.dp + v_s.qp * v_s.qp;
    let floor2 = v_floor * v_floor;
    let floored = mag2 < floor2;
    let denom = mag2.max(floor2);
    CurrentSourceOutput {
        current: SequenceFrames::new(p_total * v_s.dp / denom, p_total * v_s.qp / denom, 0.0, 0.0),
        floored,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table() -> VirtualImpedanceParams {
        VirtualImpedanceParams::symmetric(0.05, 0.2).unwrap()
    }

    #[test]
    fn zero_drive_gives_zero_current() {
        let i = virtual_impedance(&SequenceFrames::new(1.0, 0.0, 0.0, 0.0), 1.0, &table());
        assert_eq!(i, SequenceFrames::ZERO);
    }

    #[test]
    fn matrix_evaluation_examples() {
        let i = virtual_impedance(&SequenceFrames::new(0.9, 0.0, 0.0, 0.0), 1.0, &table());
        assert_abs_diff_eq!(i.dp, 0.005 / 0.0425, epsilon = 1e-12);
        assert_abs_diff_eq!(i.qp, -0.02 / 0.0425, epsilon = 1e-12);
        assert_abs_diff_eq!(i.dp, 0.117_647_058_823_529_4, epsilon = 1e-9);
        assert_abs_diff_eq!(i.qp, -0.470_588_235_294_117_6, epsilon = 1e-9);

        let i = virtual_impedance(&SequenceFrames::new(1.0, 0.0, 0.1, 0.0), 1.0, &table());
        assert_abs_diff_eq!(i.dn, -0.117_647_058_823_529_4, epsilon = 1e-9);
        assert_abs_diff_eq!(i.qn, -0.470_588_235_294_117_6, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_impedance_rejected() {
        assert!(VirtualImpedanceParams::new(0.0, 0.0, 0.05, 0.2).is_err());
        assert!(matches!(
            VirtualImpedanceParams::new(0.05, 0.2, 0.0, 0.0),
            Err(ImpedanceError::Degenerate { sequence: "negative", .. })
        ));
    }

    #[test]
    fn current_source_examples() {
        let o = current_source_ref(&SequenceFrames::new(1.0, 0.0, 0.3, 0.1), 0.5, 0.01);
        assert_eq!(o.current, SequenceFrames::new(0.5, 0.0, 0.0, 0.0));
        assert!(!o.floored);
        let o = current_source_ref(&SequenceFrames::new(0.8, 0.6, 0.0, 0.0), 1.0, 0.01);
        assert_abs_diff_eq!(o.current.dp, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(o.current.qp, 0.6, epsilon = 1e-12);
        let o = current_source_ref(&SequenceFrames::new(0.5, 0.0, 0.0, 0.0), 0.5, 0.01);
        assert_abs_diff_eq!(o.current.dp, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn current_source_floor() {
        let o = current_source_ref(&SequenceFrames::new(0.001, 0.0, 0.0, 0.0), 1.0, 0.01);
        assert!(o.floored);
        assert_abs_diff_eq!(o.current.dp, 0.001 / 1e-4, epsilon = 1e-9);
        let o = current_source_ref(&SequenceFrames::ZERO, 1.0, 0.01);
        assert_eq!(o.current, SequenceFrames::ZERO);
    }

    proptest! {
        #[test]
        fn virtual_impedance_is_linear_in_drive(
            a in prop::array::uniform4(-2.0f64..2.0),
            b in prop::array::uniform4(-2.0f64..2.0),
            va in -1.5f64..1.5, vb in -1.5f64..1.5,
        ) {
            let p = table();
            let sa = SequenceFrames::new(a[0], a[1], a[2], a[3]);
            let sb = SequenceFrames::new(b[0], b[1], b[2], b[3]);
            let sum = virtual_impedance(&(sa + sb), va + vb, &p);
            let parts = virtual_impedance(&sa, va, &p) + virtual_impedance(&sb, vb, &p);
            prop_assert!((sum.dp - parts.dp).abs() < 1e-12);
            prop_assert!((sum.qp - parts.qp).abs() < 1e-12);
            prop_assert!((sum.dn - parts.dn).abs() < 1e-12);
            prop_assert!((sum.qn - parts.qn).abs() < 1e-12);
        }

        #[test]
        fn current_source_delivers_requested_power(
            vd in -1.5f64..1.5, vq in -1.5f64..1.5, p in -2.0f64..2.0
        ) {
            let v = SequenceFrames::new(vd, vq, 0.0, 0.0);
            prop_assume!(vd.hypot(vq) > 0.02);
            let o = current_source_ref(&v, p, 0.01);
            prop_assert!((v.dot(&o.current) - p).abs() < 1e-12);
        }
    }
}
