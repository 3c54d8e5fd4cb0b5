use serde::{Deserialize, Serialize};

use crate::error::FilterError;

/// Noisy displacement measurements with a known sensor standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    noise_std: f64,
}

impl ObservationSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, noise_std: f64) -> Result<Self, FilterError> {
        if times.len() != values.len() {
            return Err(FilterError::InvalidObservations(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if !(noise_std > 0.0) || !noise_std.is_finite() {
            return Err(FilterError::InvalidObservations(format!(
                "noise standard deviation must be positive, got {noise_std}"
            )));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(FilterError::InvalidObservations(format!(
                "times must be strictly increasing (index {})",
                i + 1
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(FilterError::InvalidObservations("non-finite time or value".into()));
        }
        Ok(ObservationSeries {
            times,
            values,
            noise_std,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Observations with index in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> ObservationSeries {
        ObservationSeries {
            times: self.times[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
            noise_std: self.noise_std,
        }
    }
}
