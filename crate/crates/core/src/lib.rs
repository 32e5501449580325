//! Time-domain simulation of a grid-forming battery inverter.
//!
//! The crate models a two-level converter (averaged), its LCL filter and
//! coupling transformer connected to a Thevenin grid, and two grid-forming
//! control strategies: an emulated synchronous condenser paralleled with an
//! active-power current source, and a classical virtual synchronous
//! machine. A scenario harness drives the model through power steps, black
//! start, islanding, faults and phase jumps.

pub mod cli;
pub mod controller;
pub mod engine;
pub mod frames;
pub mod params;
pub mod plant;

pub use controller::{ControlMode, Controller, ControllerParams};
pub use engine::{run, Event, Scenario, Simulation, TimeSeriesRecord};
pub use frames::{PerUnitBase, SequenceFrames, ThreePhase};
pub use params::SystemParams;
