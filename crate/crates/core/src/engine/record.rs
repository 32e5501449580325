//! Uniformly sampled signal record.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Recorded channels, in column order.
///
/// `v_g*` is the grid-bus voltage and `i_g*` the transformer grid-side
/// current (the converter's contribution at the grid bus). `*_peak`
/// channels hold the maximum over the sample interval at full solver rate.
pub const CHANNELS: &[&str] = &[
    "t",
    "v_sa",
    "v_sb",
    "v_sc",
    "i_sa",
    "i_sb",
    "i_sc",
    "v_ga",
    "v_gb",
    "v_gc",
    "i_ga",
    "i_gb",
    "i_gc",
    "f_s",
    "p_ac",
    "q_ac",
    "p_cs",
    "p_esc",
    "p_droop",
    "limiter_active",
    "i_s_peak",
    "i_m_peak",
    "i_ref_peak",
    "v_pos",
    "v_star",
    "i_gd",
    "i_gq",
    "f_grid",
];

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("window [{start}, {end}] s contains no samples")]
    EmptyWindow { start: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub time: f64,
    pub reason: String,
}

/// Column-major time series with the fixed [`CHANNELS`] layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub scenario: String,
    pub sample_interval: f64,
    columns: Vec<Vec<f64>>,
    pub divergence: Option<Divergence>,
}

impl TimeSeriesRecord {
    pub fn new(scenario: impl Into<String>, sample_interval: f64) -> Self {
        Self {
            scenario: scenario.into(),
            sample_interval,
            columns: vec![Vec::new(); CHANNELS.len()],
            divergence: None,
        }
    }

    pub fn channel_names(&self) -> &'static [&'static str] {
        CHANNELS
    }

    /// Appends one sample; `row` must follow [`CHANNELS`].
    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), CHANNELS.len(), "sample width mismatch");
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_divergent(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn channel(&self, name: &str) -> Result<&[f64], RecordError> {
        CHANNELS
            .iter()
            .position(|c| *c == name)
            .map(|k| self.columns[k].as_slice())
            .ok_or_else(|| RecordError::UnknownChannel(name.to_string()))
    }

    pub fn times(&self) -> &[f64] {
        &self.columns[0]
    }

    pub fn row(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.columns.iter().map(move |c| c[k])
    }

    /// Index range of the samples with `start <= t <= end`.
    pub fn window(&self, start: f64, end: f64) -> std::ops::Range<usize> {
        let t = self.times();
        let tol = 1e-9;
        let lo = t.partition_point(|&x| x < start - tol);
        let hi = t.partition_point(|&x| x <= end + tol);
        lo..hi.max(lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl Summary {
    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.max.abs().max(self.min.abs())
    }
}

/// Statistics of `channel` over `[start, end]`.
pub fn measure_settled(
    record: &TimeSeriesRecord,
    channel: &str,
    window: (f64, f64),
) -> Result<Summary, RecordError> {
    let data = record.channel(channel)?;
    let range = record.window(window.0, window.1);
    if range.is_empty() {
        return Err(RecordError::EmptyWindow { start: window.0, end: window.1 });
    }
    let slice = &data[range];
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in slice {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    Ok(Summary { mean: sum / slice.len() as f64, min, max, samples: slice.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> TimeSeriesRecord {
        let mut r = TimeSeriesRecord::new("ramp", 1e-3);
        for k in 0..1000 {
            let mut row = vec![0.0; CHANNELS.len()];
            row[0] = k as f64 * 1e-3;
            row[13] = 50.0 + k as f64 * 1e-3;
            r.push(&row);
        }
        r
    }

    #[test]
    fn summary_over_window() {
        let r = ramp();
        let s = measure_settled(&r, "f_s", (0.5, 0.599)).unwrap();
        assert_eq!(s.samples, 100);
        assert!((s.min - 50.5).abs() < 1e-12);
        assert!((s.max - 50.599).abs() < 1e-9);
        assert!((s.mean - 50.5495).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let r = ramp();
        assert_eq!(
            measure_settled(&r, "f_s", (5.0, 6.0)),
            Err(RecordError::EmptyWindow { start: 5.0, end: 6.0 })
        );
        assert!(matches!(measure_settled(&r, "nope", (0.0, 1.0)), Err(RecordError::UnknownChannel(_))));
    }
}
