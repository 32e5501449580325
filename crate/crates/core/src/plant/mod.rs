//! Averaged electrical model of the converter, LCL filter, coupling
//! transformer and Thevenin grid.
//!
//! ```text
//!  v_mod ─ R_f,L_f ─┬─ s ─ R_tr,X_tr ─┬─ b ─ breaker ─ R_g,X_g ─ e_g
//!         (i_m)     C_f  (i_t)        shunts                 (i_g)
//!                   terminal load     faults, bus load
//! ```
//!
//! The network is solved with trapezoidal companion models on the two
//! three-phase nodes `s` and `b`. The converter side is three-wire and the
//! transformer blocks zero sequence, so both the filter and the transformer
//! branches act only on the zero-sequence-free subspace. After every
//! topology change two backward-Euler steps are taken to damp the
//! trapezoidal chatter that follows current discontinuities.

pub mod grid;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6, LU, U6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::ThreePhase;
pub use grid::{grid_voltage, scl_to_impedance, FrequencyRamp, GridParams, GridProfile, PhaseJump};

/// Shunt conductance from every node to ground.
const G_MIN: f64 = 1e-6;
const DAMPING_STEPS: u32 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum PlantError {
    #[error("plant parameter `{name}` = {value} must be > 0")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("non-finite plant state at t = {time:.6} s")]
    NonFinite { time: f64 },
    #[error("singular network matrix")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub l_f: f64,
    pub r_f: f64,
    pub c_f: f64,
    pub x_tr: f64,
    pub r_tr: f64,
    /// Base angular frequency [rad/s].
    pub omega_base: f64,
    /// Base power used to convert the grid short-circuit level [VA].
    pub s_base: f64,
    pub grid: GridParams,
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        for (name, value) in [
            ("l_f", self.l_f),
            ("c_f", self.c_f),
            ("x_tr", self.x_tr),
            ("omega_base", self.omega_base),
            ("s_base", self.s_base),
            ("scl", self.grid.scl),
        ] {
            if !(value > 0.0) {
                return Err(PlantError::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    /// Grid Thevenin `(r, x)` [p.u.].
    pub fn grid_impedance(&self) -> (f64, f64) {
        scl_to_impedance(self.grid.scl, self.s_base, self.grid.x_r_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    /// Phase a to ground.
    #[serde(rename = "1ph")]
    SinglePhase,
    /// Phase b to phase c.
    #[serde(rename = "2ph")]
    TwoPhase,
    /// Phases b and c to ground.
    #[serde(rename = "2ph-g")]
    TwoPhaseGround,
    /// All phases to ground.
    #[serde(rename = "3ph")]
    ThreePhase,
}

impl std::str::FromStr for FaultKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1ph" => Ok(Self::SinglePhase),
            "2ph" => Ok(Self::TwoPhase),
            "2ph-g" => Ok(Self::TwoPhaseGround),
            "3ph" => Ok(Self::ThreePhase),
            other => Err(format!("unknown fault kind `{other}`")),
        }
    }
}

/// Bus a shunt element is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bus {
    /// Converter terminals (filter capacitor node).
    Terminal,
    /// Grid-side bus behind the transformer.
    Grid,
}

/// Switchable part of the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub breaker_closed: bool,
    /// Active fault at the grid bus and its per-phase resistance [p.u.].
    pub fault: Option<(FaultKind, f64)>,
    /// Balanced resistive load conductance at the terminals [p.u.].
    pub load_terminal: f64,
    /// Balanced resistive load conductance at the grid bus [p.u.].
    pub load_grid: f64,
}

impl Topology {
    pub fn connected() -> Self {
        Self { breaker_closed: true, fault: None, load_terminal: 0.0, load_grid: 0.0 }
    }

    fn terminal_shunt(&self) -> Matrix3<f64> {
        Matrix3::identity() * self.load_terminal
    }

    fn grid_shunt(&self) -> Matrix3<f64> {
        let mut g = Matrix3::identity() * self.load_grid;
        if let Some((kind, r)) = self.fault {
            let gf = 1.0 / r;
            match kind {
                FaultKind::SinglePhase => g[(0, 0)] += gf,
                FaultKind::TwoPhase => {
                    g[(1, 1)] += gf;
                    g[(2, 2)] += gf;
                    g[(1, 2)] -= gf;
                    g[(2, 1)] -= gf;
                }
                FaultKind::TwoPhaseGround => {
                    g[(1, 1)] += gf;
                    g[(2, 2)] += gf;
                }
                FaultKind::ThreePhase => {
                    for k in 0..3 {
                        g[(k, k)] += gf;
                    }
                }
            }
        }
        g
    }
}

/// Electrical state of the network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Converter-side inductor current.
    pub i_m: ThreePhase,
    /// Filter capacitor voltage.
    pub v_s: ThreePhase,
    /// Filter capacitor current.
    pub i_c: ThreePhase,
    /// Transformer current toward the grid bus.
    pub i_t: ThreePhase,
    /// Grid bus voltage.
    pub v_b: ThreePhase,
    /// Grid branch current from the bus into the source.
    pub i_g: ThreePhase,
    /// Grid source voltage at the current time.
    pub e_g: ThreePhase,
}

impl PlantState {
    pub fn is_finite(&self) -> bool {
        [self.i_m, self.v_s, self.i_c, self.i_t, self.v_b, self.i_g]
            .iter()
            .all(ThreePhase::is_finite)
    }
}

/// Instantaneous power flows [p.u.].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantPowers {
    pub converter: f64,
    pub grid_source: f64,
    pub loads: f64,
    pub faults: f64,
    pub losses: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Method {
    Trapezoidal,
    BackwardEuler,
}

/// RL branch companion: `i₁ = a·i₀ + g1·v₁ + g0·v₀`.
#[derive(Debug, Clone, Copy)]
struct RlCompanion {
    a: f64,
    g1: f64,
    g0: f64,
}

impl RlCompanion {
    fn new(l: f64, r: f64, omega_base: f64, dt: f64, method: Method) -> Self {
        let k = l / (omega_base * dt);
        match method {
            Method::Trapezoidal => {
                let den = k + 0.5 * r;
                Self { a: (k - 0.5 * r) / den, g1: 0.5 / den, g0: 0.5 / den }
            }
            Method::BackwardEuler => Self { a: k / (k + r), g1: 1.0 / (k + r), g0: 0.0 },
        }
    }
}

/// Capacitor companion: `i₁ = gc·(v₁ - v₀) - beta·i₀`.
#[derive(Debug, Clone, Copy)]
struct CapCompanion {
    gc: f64,
    beta: f64,
}

impl CapCompanion {
    fn new(c: f64, omega_base: f64, dt: f64, method: Method) -> Self {
        match method {
            Method::Trapezoidal => Self { gc: 2.0 * c / (omega_base * dt), beta: 1.0 },
            Method::BackwardEuler => Self { gc: c / (omega_base * dt), beta: 0.0 },
        }
    }
}

#[derive(Debug, Clone)]
struct Solver {
    method: Method,
    dt: f64,
    topology: Topology,
    filter: RlCompanion,
    cap: CapCompanion,
    xfmr: RlCompanion,
    grid: RlCompanion,
    lu: LU<f64, U6, U6>,
}

fn zero_seq_projector() -> Matrix3<f64> {
    Matrix3::identity() - Matrix3::from_element(1.0 / 3.0)
}

fn vec3(x: ThreePhase) -> Vector3<f64> {
    Vector3::new(x.a, x.b, x.c)
}

fn tp(v: Vector3<f64>) -> ThreePhase {
    ThreePhase::new(v[0], v[1], v[2])
}

/// The electrical network with its switchable topology and grid source.
#[derive(Debug, Clone)]
pub struct Plant {
    pub params: PlantParams,
    pub profile: GridProfile,
    pub state: PlantState,
    pub time: f64,
    topology: Topology,
    damping_steps: u32,
    solver: Option<Solver>,
}

impl Plant {
    pub fn new(params: PlantParams, profile: GridProfile, t0: f64) -> Result<Self, PlantError> {
        params.validate()?;
        let topology = Topology {
            breaker_closed: params.grid.connected,
            ..Topology::connected()
        };
        let mut state = PlantState::default();
        if topology.breaker_closed {
            state.e_g = profile.voltage(t0);
        }
        Ok(Self {
            params,
            profile,
            state,
            time: t0,
            topology,
            damping_steps: 0,
            solver: None,
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn set_topology(&mut self, topology: Topology) {
        if topology != self.topology {
            if !topology.breaker_closed {
                self.state.i_g = ThreePhase::ZERO;
            }
            self.topology = topology;
            self.damping_steps = DAMPING_STEPS;
        }
    }

    /// Current leaving the capacitor node: transformer plus terminal load.
    pub fn i_s(&self) -> ThreePhase {
        self.state.i_t + self.state.v_s * self.topology.load_terminal
    }

    fn build_solver(&self, dt: f64, method: Method) -> Result<Solver, PlantError> {
        let p = &self.params;
        let (r_g, x_g) = p.grid_impedance();
        let filter = RlCompanion::new(p.l_f, p.r_f, p.omega_base, dt, method);
        let cap = CapCompanion::new(p.c_f, p.omega_base, dt, method);
        let xfmr = RlCompanion::new(p.x_tr, p.r_tr, p.omega_base, dt, method);
        let grid = RlCompanion::new(x_g, r_g, p.omega_base, dt, method);
        let p0 = zero_seq_projector();
        let id = Matrix3::identity();

        let yss = p0 * (filter.g1 + xfmr.g1) + id * (cap.gc + G_MIN) + self.topology.terminal_shunt();
        let mut ybb = p0 * xfmr.g1 + id * G_MIN + self.topology.grid_shunt();
        if self.topology.breaker_closed {
            ybb += id * grid.g1;
        }
        let ysb = -p0 * xfmr.g1;
        let mut y = Matrix6::zeros();
        y.fixed_view_mut::<3, 3>(0, 0).copy_from(&yss);
        y.fixed_view_mut::<3, 3>(0, 3).copy_from(&ysb);
        y.fixed_view_mut::<3, 3>(3, 0).copy_from(&ysb);
        y.fixed_view_mut::<3, 3>(3, 3).copy_from(&ybb);
        let lu = y.lu();
        if !lu.is_invertible() {
            return Err(PlantError::Singular);
        }
        Ok(Solver { method, dt, topology: self.topology, filter, cap, xfmr, grid, lu })
    }

    /// Advances the network by `dt` with the modulation voltage held
    /// constant over the step.
    pub fn step(&mut self, v_mod: ThreePhase, dt: f64) -> Result<(), PlantError> {
        let method = if self.damping_steps > 0 {
            self.damping_steps -= 1;
            Method::BackwardEuler
        } else {
            Method::Trapezoidal
        };
        let stale = match &self.solver {
            Some(s) => s.method != method || s.dt != dt || s.topology != self.topology,
            None => true,
        };
        if stale {
            self.solver = Some(self.build_solver(dt, method)?);
        }
        let s = self.solver.as_ref().expect("solver built above");
        let p0 = zero_seq_projector();
        let st = &self.state;
        let t1 = self.time + dt;

        let vm = vec3(v_mod);
        let vs0 = vec3(st.v_s);
        let vb0 = vec3(st.v_b);
        let e0 = vec3(st.e_g);
        let e1 = if self.topology.breaker_closed { vec3(self.profile.voltage(t1)) } else { Vector3::zeros() };

        let h_f = vec3(st.i_m) * s.filter.a + p0 * (vm - vs0) * s.filter.g0;
        let h_c = -vs0 * s.cap.gc - vec3(st.i_c) * s.cap.beta;
        let h_t = vec3(st.i_t) * s.xfmr.a + p0 * (vs0 - vb0) * s.xfmr.g0;
        let h_g = vec3(st.i_g) * s.grid.a + (vb0 - e0) * s.grid.g0;

        let js = p0 * vm * s.filter.g1 + h_f - h_c - h_t;
        let mut jb = h_t;
        if self.topology.breaker_closed {
            jb += e1 * s.grid.g1 - h_g;
        }
        let mut rhs = Vector6::zeros();
        rhs.fixed_rows_mut::<3>(0).copy_from(&js);
        rhs.fixed_rows_mut::<3>(3).copy_from(&jb);
        let x = s.lu.solve(&rhs).ok_or(PlantError::Singular)?;
        let vs1: Vector3<f64> = x.fixed_rows::<3>(0).into();
        let vb1: Vector3<f64> = x.fixed_rows::<3>(3).into();

        let i_f = p0 * (vm - vs1) * s.filter.g1 + h_f;
        let i_c = vs1 * s.cap.gc + h_c;
        let i_t = p0 * (vs1 - vb1) * s.xfmr.g1 + h_t;
        let i_g = if self.topology.breaker_closed {
            (vb1 - e1) * s.grid.g1 + h_g
        } else {
            Vector3::zeros()
        };

        self.state = PlantState {
            i_m: tp(i_f),
            v_s: tp(vs1),
            i_c: tp(i_c),
            i_t: tp(i_t),
            v_b: tp(vb1),
            i_g: tp(i_g),
            e_g: tp(e1),
        };
        self.time = t1;
        if !self.state.is_finite() {
            return Err(PlantError::NonFinite { time: t1 });
        }
        Ok(())
    }

    /// Magnetic and electric energy stored in the network [p.u.·s].
    pub fn stored_energy(&self) -> f64 {
        let p = &self.params;
        let (_, x_g) = p.grid_impedance();
        let st = &self.state;
        let half = 0.5 / p.omega_base;
        let mut w = half * (p.l_f * st.i_m.dot(&st.i_m) + p.c_f * st.v_s.dot(&st.v_s));
        w += half * p.x_tr * st.i_t.dot(&st.i_t);
        w += half * x_g * st.i_g.dot(&st.i_g);
        w * 2.0 / 3.0
    }

    /// Instantaneous power flows for the modulation voltage `v_mod`.
    pub fn powers(&self, v_mod: ThreePhase) -> PlantPowers {
        let p = &self.params;
        let (r_g, _) = p.grid_impedance();
        let st = &self.state;
        let k = 2.0 / 3.0;
        let gb = self.topology.grid_shunt();
        let vb = vec3(st.v_b);
        let load_b = self.topology.load_grid * st.v_b.dot(&st.v_b);
        let shunt_b = vb.dot(&(gb * vb));
        PlantPowers {
            converter: k * v_mod.dot(&st.i_m),
            grid_source: k * st.e_g.dot(&st.i_g),
            loads: k * (self.topology.load_terminal * st.v_s.dot(&st.v_s) + load_b),
            faults: k * (shunt_b - load_b),
            losses: k
                * (p.r_f * st.i_m.dot(&st.i_m)
                    + p.r_tr * st.i_t.dot(&st.i_t)
                    + r_g * st.i_g.dot(&st.i_g)
                    + G_MIN * (st.v_s.dot(&st.v_s) + st.v_b.dot(&st.v_b))),
        }
    }
}

/// Free-function form of [`Plant::step`].
pub fn plant_step(plant: &mut Plant, v_mod: ThreePhase, dt: f64) -> Result<(), PlantError> {
    plant.step(v_mod, dt)
}
