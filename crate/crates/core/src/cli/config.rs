//! Scenario configuration files (TOML).
//!
//! A config either describes a complete scenario or starts from a built-in
//! preset named by `base` and overrides parts of it:
//!
//! ```toml
//! base = "s4"
//! duration = 4.0
//!
//! [params]
//! i_lim = 1.2
//!
//! [[events]]
//! kind = "fault"
//! start = 1.0
//! end = 1.5
//! fault = "3ph"
//! ```
//!
//! Omitted keys keep the base values (the default parameter set when there
//! is no base). A non-empty `events` array replaces the base timeline.

use thiserror::Error;
use toml::{Table, Value};

use super::presets;
use crate::controller::ControlMode;
use crate::engine::{Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("unknown base preset `{0}`")]
    UnknownBase(String),
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error(transparent)]
    Range(#[from] ScenarioError),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
}

const BASE_KEY: &str = "base";
const EVENTS_KEY: &str = "events";

/// Parses and validates a scenario config.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let mut doc: Table = text.parse()?;
    let base = match doc.remove(BASE_KEY) {
        Some(Value::String(name)) => presets::preset(&name).ok_or(ConfigError::UnknownBase(name))?,
        Some(_) => {
            return Err(ConfigError::Invalid { key: BASE_KEY.into(), reason: "must be a preset name".into() })
        }
        None => Scenario::new("custom", ControlMode::Esc, 1.0),
    };
    let mut merged = match Value::try_from(&base)? {
        Value::Table(t) => t,
        _ => unreachable!("a scenario serializes to a table"),
    };
    if let Some(events) = doc.remove(EVENTS_KEY) {
        merged.insert(EVENTS_KEY.into(), events);
    }
    merge(&mut merged, doc, "")?;
    let scenario: Scenario = Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Invalid { key: EVENTS_KEY.into(), reason: e.message().to_string() })?;
    scenario.validate()?;
    Ok(scenario)
}

/// Overlays `src` on `dst`, rejecting keys that `dst` does not define.
fn merge(dst: &mut Table, src: Table, prefix: &str) -> Result<(), ConfigError> {
    for (key, value) in src {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        let Some(slot) = dst.get_mut(&key) else {
            return Err(ConfigError::UnknownKey(path));
        };
        match (slot, value) {
            (Value::Table(d), Value::Table(s)) => merge(d, s, &path)?,
            (slot @ Value::Float(_), Value::Integer(i)) => *slot = Value::Float(i as f64),
            (slot, value) if slot.same_type(&value) => *slot = value,
            (slot, value) => {
                return Err(ConfigError::Invalid {
                    key: path,
                    reason: format!("expected {}, found {}", slot.type_str(), value.type_str()),
                })
            }
        }
    }
    Ok(())
}

/// Full config text for `scenario`; parsing it yields the same scenario.
pub fn to_config(scenario: &Scenario) -> Result<String, ConfigError> {
    Ok(toml::to_string(scenario)?)
}
