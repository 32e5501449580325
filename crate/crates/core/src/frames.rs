//! Per-unit bases, abc/dq reference-frame transformations and
//! positive/negative sequence separation.
//!
//! All transformations use the amplitude-invariant (peak) convention: a
//! balanced positive-sequence set of peak 1.0 aligned with the frame angle
//! maps to `d = 1, q = 0`. Complex notation is used internally with
//! `x_αβ = α + jβ`, `x_dq⁺ = x_αβ·e^{-jθ}` and `x_dq⁻ = x_αβ·e^{+jθ}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const TWO_THIRDS: f64 = 2.0 / 3.0;
const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Error, PartialEq)]
pub enum FramesError {
    #[error("base `{name}` must be strictly positive and finite, got {value}")]
    InvalidBase { name: &'static str, value: f64 },
    #[error("unknown per-unit side `{0}` (expected `grid` or `lv`)")]
    UnknownSide(String),
}

/// Side of the coupling transformer a quantity is referred to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Grid,
    Lv,
}

impl FromStr for Side {
    type Err = FramesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grid" | "hv" => Ok(Side::Grid),
            "lv" | "converter" => Ok(Side::Lv),
            other => Err(FramesError::UnknownSide(other.to_string())),
        }
    }
}

/// Kind of physical quantity being scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Peak phase voltage [V].
    Voltage,
    /// Peak phase current [A].
    Current,
    /// Three-phase power [W, var, VA].
    Power,
    /// Series impedance [Ω].
    Impedance,
}

/// Base quantities used to express the system in per-unit.
///
/// Voltage and current bases are peak phase values, so that
/// `s_base = 3/2 · v_base · i_base` on both sides of the transformer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUnitBase {
    pub s_base: f64,
    pub v_base_grid: f64,
    pub v_base_lv: f64,
    pub omega_base: f64,
    pub i_base_grid: f64,
    pub i_base_lv: f64,
}

impl PerUnitBase {
    /// Builds the bases from rated apparent power, rms line-to-line voltages
    /// and nominal frequency.
    pub fn new(
        s_base: f64,
        v_ll_grid: f64,
        v_ll_lv: f64,
        f_base: f64,
    ) -> Result<Self, FramesError> {
        for (name, value) in [
            ("s_base", s_base),
            ("v_ll_grid", v_ll_grid),
            ("v_ll_lv", v_ll_lv),
            ("f_base", f_base),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(FramesError::InvalidBase { name, value });
            }
        }
        let peak = (2.0f64 / 3.0).sqrt();
        let v_base_grid = peak * v_ll_grid;
        let v_base_lv = peak * v_ll_lv;
        Ok(Self {
            s_base,
            v_base_grid,
            v_base_lv,
            omega_base: 2.0 * PI * f_base,
            i_base_grid: TWO_THIRDS * s_base / v_base_grid,
            i_base_lv: TWO_THIRDS * s_base / v_base_lv,
        })
    }

    pub fn f_base(&self) -> f64 {
        self.omega_base / (2.0 * PI)
    }

    pub fn v_base(&self, side: Side) -> f64 {
        match side {
            Side::Grid => self.v_base_grid,
            Side::Lv => self.v_base_lv,
        }
    }

    pub fn i_base(&self, side: Side) -> f64 {
        match side {
            Side::Grid => self.i_base_grid,
            Side::Lv => self.i_base_lv,
        }
    }

    pub fn z_base(&self, side: Side) -> f64 {
        self.v_base(side) / self.i_base(side)
    }

    fn base_of(&self, quantity: Quantity, side: Side) -> f64 {
        match quantity {
            Quantity::Voltage => self.v_base(side),
            Quantity::Current => self.i_base(side),
            Quantity::Power => self.s_base,
            Quantity::Impedance => self.z_base(side),
        }
    }

    pub fn to_per_unit(&self, value: f64, quantity: Quantity, side: Side) -> f64 {
        value / self.base_of(quantity, side)
    }

    pub fn from_per_unit(&self, value: f64, quantity: Quantity, side: Side) -> f64 {
        value * self.base_of(quantity, side)
    }
}

impl Default for PerUnitBase {
    /// 2 MVA, 20 kV / 400 V, 50 Hz.
    fn default() -> Self {
        Self::new(2.0e6, 20.0e3, 400.0, 50.0).expect("default bases are valid")
    }
}

/// Instantaneous three-phase quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ThreePhase {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ThreePhase {
    pub const ZERO: ThreePhase = ThreePhase { a: 0.0, b: 0.0, c: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Balanced positive-sequence set `m·cos(φ - k·2π/3)`.
    pub fn balanced(magnitude: f64, phase: f64) -> Self {
        Self::new(
            magnitude * phase.cos(),
            magnitude * (phase - 2.0 * PI / 3.0).cos(),
            magnitude * (phase + 2.0 * PI / 3.0).cos(),
        )
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn zero_sequence(&self) -> f64 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn without_zero_sequence(&self) -> Self {
        let z = self.zero_sequence();
        Self::new(self.a - z, self.b - z, self.c - z)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    pub fn dot(&self, other: &ThreePhase) -> f64 {
        self.a * other.a + self.b * other.b + self.c * other.c
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }

    /// Clarke transformation, amplitude invariant, zero sequence dropped.
    pub fn to_alpha_beta(&self) -> Complex64 {
        Complex64::new(
            TWO_THIRDS * (self.a - 0.5 * self.b - 0.5 * self.c),
            TWO_THIRDS * SQRT3_2 * (self.b - self.c),
        )
    }

    pub fn from_alpha_beta(x: Complex64) -> Self {
        Self::new(
            x.re,
            -0.5 * x.re + SQRT3_2 * x.im,
            -0.5 * x.re - SQRT3_2 * x.im,
        )
    }
}

impl Add for ThreePhase {
    type Output = ThreePhase;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c)
    }
}

impl Sub for ThreePhase {
    type Output = ThreePhase;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a - rhs.a, self.b - rhs.b, self.c - rhs.c)
    }
}

impl Mul<f64> for ThreePhase {
    type Output = ThreePhase;
    fn mul(self, k: f64) -> Self {
        Self::new(self.a * k, self.b * k, self.c * k)
    }
}

/// Two-axis quantity in a frame rotating with angle `theta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DqFrame {
    pub d: f64,
    pub q: f64,
    pub theta: f64,
}

impl DqFrame {
    pub fn new(d: f64, q: f64, theta: f64) -> Self {
        Self { d, q, theta }
    }

    pub fn from_complex(x: Complex64, theta: f64) -> Self {
        Self::new(x.re, x.im, theta)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.d, self.q)
    }

    pub fn magnitude(&self) -> f64 {
        self.d.hypot(self.q)
    }
}

/// Park transformation at angle `theta`.
pub fn abc_to_dq(x: ThreePhase, theta: f64) -> DqFrame {
    let rot = Complex64::from_polar(1.0, -theta);
    DqFrame::from_complex(x.to_alpha_beta() * rot, theta)
}

/// Inverse Park transformation using the frame angle carried by `x`.
pub fn dq_to_abc(x: DqFrame) -> ThreePhase {
    ThreePhase::from_alpha_beta(x.as_complex() * Complex64::from_polar(1.0, x.theta))
}

/// Symmetrical components expressed in their own synchronous frames:
/// positive sequence in the `+θ` frame, negative sequence in the `-θ` frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceFrames {
    pub dp: f64,
    pub qp: f64,
    pub dn: f64,
    pub qn: f64,
}

impl SequenceFrames {
    pub const ZERO: SequenceFrames = SequenceFrames { dp: 0.0, qp: 0.0, dn: 0.0, qn: 0.0 };

    pub const fn new(dp: f64, qp: f64, dn: f64, qn: f64) -> Self {
        Self { dp, qp, dn, qn }
    }

    pub fn from_complex(positive: Complex64, negative: Complex64) -> Self {
        Self::new(positive.re, positive.im, negative.re, negative.im)
    }

    pub fn positive(&self) -> Complex64 {
        Complex64::new(self.dp, self.qp)
    }

    pub fn negative(&self) -> Complex64 {
        Complex64::new(self.dn, self.qn)
    }

    /// Four-component dot product `x·y` over (dp, qp, dn, qn).
    pub fn dot(&self, other: &SequenceFrames) -> f64 {
        self.dp * other.dp + self.qp * other.qp + self.dn * other.dn + self.qn * other.qn
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.dp * k, self.qp * k, self.dn * k, self.qn * k)
    }

    /// Reconstructs the zero-sequence-free abc signal at frame angle `theta`.
    pub fn to_abc(&self, theta: f64) -> ThreePhase {
        let ab = self.positive() * Complex64::from_polar(1.0, theta)
            + self.negative() * Complex64::from_polar(1.0, -theta);
        ThreePhase::from_alpha_beta(ab)
    }

    pub fn is_finite(&self) -> bool {
        self.dp.is_finite() && self.qp.is_finite() && self.dn.is_finite() && self.qn.is_finite()
    }
}

impl Add for SequenceFrames {
    type Output = SequenceFrames;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.dp + rhs.dp, self.qp + rhs.qp, self.dn + rhs.dn, self.qn + rhs.qn)
    }
}

impl fmt::Display for SequenceFrames {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(dp={:.5}, qp={:.5}, dn={:.5}, qn={:.5})",
            self.dp, self.qp, self.dn, self.qn
        )
    }
}

/// Maps sequence components onto the positive-sequence frame at `theta`:
/// `x⁺ + R(-2θ)·x⁻`. Equal to `abc_to_dq(i.to_abc(θ), θ)`.
pub fn combined_park(i: SequenceFrames, theta: f64) -> DqFrame {
    let x = i.positive() + i.negative() * Complex64::from_polar(1.0, -2.0 * theta);
    DqFrame::from_complex(x, theta)
}

/// Default DDSRF cutoff: ω_base/√2.
pub fn default_ddsrf_cutoff(omega_base: f64) -> f64 {
    omega_base * FRAC_1_SQRT_2
}

/// Decoupled double synchronous reference frame sequence separator.
///
/// The input is rotated into the `+θ` and `-θ` frames; each channel has the
/// 2ω image of the opposite sequence removed using the filtered estimate of
/// that sequence, then goes through a first-order low-pass filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdsrfState {
    pub positive: SequenceFrames,
    /// Cutoff frequency [rad/s].
    pub cutoff: f64,
}

impl DdsrfState {
    pub fn new(cutoff: f64) -> Self {
        Self { positive: SequenceFrames::ZERO, cutoff }
    }

    /// Filter states seeded with a known decomposition.
    pub fn with_output(cutoff: f64, output: SequenceFrames) -> Self {
        Self { positive: output, cutoff }
    }

    pub fn output(&self) -> SequenceFrames {
        self.positive
    }

    /// Advances the separator by one sample and returns the filtered
    /// sequence components.
    pub fn step(&mut self, x: ThreePhase, theta: f64, dt: f64) -> SequenceFrames {
        let ab = x.to_alpha_beta();
        let rot_p = Complex64::from_polar(1.0, -theta);
        let rot_2 = Complex64::from_polar(1.0, -2.0 * theta);
        let p_raw = ab * rot_p;
        let n_raw = ab * rot_p.conj();

        let p_est = self.positive.positive();
        let n_est = self.positive.negative();
        let p_dec = p_raw - n_est * rot_2;
        let n_dec = n_raw - p_est * rot_2.conj();

        let alpha = 1.0 - (-self.cutoff * dt).exp();
        let p_new = p_est + (p_dec - p_est) * alpha;
        let n_new = n_est + (n_dec - n_est) * alpha;
        self.positive = SequenceFrames::from_complex(p_new, n_new);
        self.positive
    }
}

/// Free-function form of [`DdsrfState::step`].
pub fn ddsrf_step(state: &mut DdsrfState, x: ThreePhase, theta: f64, dt: f64) -> SequenceFrames {
    state.step(x, theta, dt)
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn park_alignment_and_quadrature() {
        for &theta in &[0.0, 0.3, 1.7, -2.2, 5.9] {
            let x = ThreePhase::balanced(1.0, theta);
            let dq = abc_to_dq(x, theta);
            assert_abs_diff_eq!(dq.d, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dq.q, 0.0, epsilon = 1e-12);

            let dq = abc_to_dq(x, theta - PI / 2.0);
            assert_abs_diff_eq!(dq.d, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(dq.q, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn park_rejects_zero_sequence() {
        let dq = abc_to_dq(ThreePhase::new(0.7, 0.7, 0.7), 1.234);
        assert_abs_diff_eq!(dq.d, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dq.q, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_park_examples() {
        let x = dq_to_abc(DqFrame::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(x.a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.b, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x.c, -0.5, epsilon = 1e-15);
        assert_eq!(dq_to_abc(DqFrame::new(0.0, 0.0, 0.7)), ThreePhase::ZERO);
    }

    #[test]
    fn per_unit_table_values() {
        let base = PerUnitBase::default();
        assert_abs_diff_eq!(base.v_base_lv, 326.598_632_371_090_4, epsilon = 1e-9);
        // (2/3)·2e6/326.5986 = 4082.48 A
        assert_abs_diff_eq!(base.i_base_lv, 4_082.482_904_638_63, epsilon = 1e-6);
        assert_eq!(base.to_per_unit(0.0, Quantity::Voltage, Side::Lv), 0.0);
        assert_abs_diff_eq!(
            base.s_base,
            1.5 * base.v_base_grid * base.i_base_grid,
            epsilon = 1e-6
        );
    }

    #[test]
    fn per_unit_rejects_bad_bases_and_sides() {
        assert!(matches!(
            PerUnitBase::new(0.0, 20e3, 400.0, 50.0),
            Err(FramesError::InvalidBase { name: "s_base", .. })
        ));
        assert!(PerUnitBase::new(2e6, 20e3, f64::NAN, 50.0).is_err());
        assert_eq!("GRID".parse::<Side>(), Ok(Side::Grid));
        assert!(matches!("dc".parse::<Side>(), Err(FramesError::UnknownSide(_))));
    }

    #[test]
    fn combined_park_examples() {
        let out = combined_park(SequenceFrames::new(1.0, 0.0, 0.0, 0.0), 2.1);
        assert_abs_diff_eq!(out.d, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.q, 0.0, epsilon = 1e-15);

        let out = combined_park(SequenceFrames::new(0.0, 0.0, 1.0, 0.0), 0.0);
        assert_abs_diff_eq!(out.d, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.q, 0.0, epsilon = 1e-15);

        let seq = SequenceFrames::new(0.0, 0.0, 1.0, 0.0);
        let theta = PI / 4.0;
        let out = combined_park(seq, theta);
        assert_abs_diff_eq!(out.d, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.q, -1.0, epsilon = 1e-12);
        // abc-domain oracle: unit negative-sequence set (b leads a) at angle θ
        let abc = ThreePhase::new(
            theta.cos(),
            (theta + 2.0 * PI / 3.0).cos(),
            (theta - 2.0 * PI / 3.0).cos(),
        );
        let via_abc = abc_to_dq(abc, theta);
        assert_abs_diff_eq!(via_abc.d, out.d, epsilon = 1e-12);
        assert_abs_diff_eq!(via_abc.q, out.q, epsilon = 1e-12);
    }

    fn settle(state: &mut DdsrfState, signal: impl Fn(f64) -> ThreePhase) -> SequenceFrames {
        let omega = 2.0 * PI * 50.0;
        let dt = 20e-6;
        let mut out = SequenceFrames::ZERO;
        for n in 0..10_000 {
            let t = n as f64 * dt;
            out = state.step(signal(t), omega * t, dt);
        }
        out
    }

    #[test]
    fn ddsrf_pure_sequences() {
        let omega = 2.0 * PI * 50.0;
        let mut st = DdsrfState::new(default_ddsrf_cutoff(omega));
        let out = settle(&mut st, |t| ThreePhase::balanced(1.0, omega * t));
        assert_abs_diff_eq!(out.dp, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.qp, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.dn, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.qn, 0.0, epsilon = 1e-6);

        let mut st = DdsrfState::new(default_ddsrf_cutoff(omega));
        let out = settle(&mut st, |t| ThreePhase::balanced(0.3, -omega * t + 0.4));
        assert_abs_diff_eq!(out.positive().norm(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.negative().norm(), 0.3, epsilon = 1e-6);
    }

    #[test]
    fn ddsrf_matches_symmetrical_components() {
        let omega = 2.0 * PI * 50.0;
        // arbitrary unbalanced phasors, zero sequence included
        let phasors = [
            Complex64::from_polar(0.9, 0.3),
            Complex64::from_polar(0.4, -2.2),
            Complex64::from_polar(1.1, 1.7),
        ];
        let a = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let v_pos = (phasors[0] + a * phasors[1] + a * a * phasors[2]) / 3.0;
        let v_neg = (phasors[0] + a * a * phasors[1] + a * phasors[2]) / 3.0;

        let mut st = DdsrfState::new(default_ddsrf_cutoff(omega));
        let out = settle(&mut st, |t| {
            let x = |k: usize| (phasors[k] * Complex64::from_polar(1.0, omega * t)).re;
            ThreePhase::new(x(0), x(1), x(2))
        });
        // x(t) = Re(V e^{jωt}): positive rotates with +θ, negative with -θ
        assert!((out.positive() - v_pos).norm() < 1e-3, "{out} vs {v_pos}");
        assert!((out.negative() - v_neg.conj()).norm() < 1e-3, "{out} vs {}", v_neg.conj());
    }

    #[test]
    fn sequence_reconstruction() {
        let s = SequenceFrames::new(0.8, -0.1, 0.2, 0.05);
        for &theta in &[0.0, 1.0, 4.0] {
            let abc = s.to_abc(theta);
            assert_abs_diff_eq!(abc.zero_sequence(), 0.0, epsilon = 1e-15);
            let back = combined_park(s, theta);
            let direct = abc_to_dq(abc, theta);
            assert_abs_diff_eq!(back.d, direct.d, epsilon = 1e-12);
            assert_abs_diff_eq!(back.q, direct.q, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn park_round_trip(a in -5.0f64..5.0, b in -5.0f64..5.0, theta in -10.0f64..10.0) {
            let x = ThreePhase::new(a, b, -a - b);
            let back = dq_to_abc(abc_to_dq(x, theta));
            prop_assert!((back.a - x.a).abs() < 1e-12);
            prop_assert!((back.b - x.b).abs() < 1e-12);
            prop_assert!((back.c - x.c).abs() < 1e-12);
        }

        #[test]
        fn rotation_preserves_magnitude(d in -3.0f64..3.0, q in -3.0f64..3.0,
                                        t1 in -7.0f64..7.0, t2 in -7.0f64..7.0) {
            let abc = dq_to_abc(DqFrame::new(d, q, t1));
            let other = abc_to_dq(abc, t2);
            prop_assert!((other.magnitude() - d.hypot(q)).abs() < 1e-12);
        }

        #[test]
        fn per_unit_round_trip(v in -1e7f64..1e7) {
            let base = PerUnitBase::default();
            for q in [Quantity::Voltage, Quantity::Current, Quantity::Power, Quantity::Impedance] {
                for side in [Side::Grid, Side::Lv] {
                    let back = base.from_per_unit(base.to_per_unit(v, q, side), q, side);
                    prop_assert!((back - v).abs() <= 1e-15 * v.abs().max(1.0) * 4.0);
                }
            }
        }
    }
}
