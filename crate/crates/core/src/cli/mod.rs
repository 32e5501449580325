//! Scenario harness: presets, config files, acceptance checks, records
//! and plot scripts.

pub mod checks;
pub mod config;
pub mod plots;
pub mod presets;
pub mod suite;
