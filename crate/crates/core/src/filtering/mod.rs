//! Extended Kalman filtering over the augmented state and the resulting
//! marginal likelihood `p(D | theta, M)`.
//!
//! Between observations the belief is forecast along a uniform computational
//! grid; at observation times it is updated and the predictive density of the
//! observation is accumulated. For models that are linear in the state the
//! recursion is exactly the Kalman filter.

mod belief;
mod ekf;
mod observations;

use serde::{Deserialize, Serialize};

pub use belief::GaussianBelief;
pub use ekf::{
    analyze, dynamics_log_likelihood, forecast, log_normal_pdf, run_dynamics_filter, Analysis, FilterResult,
    GridBelief, GridSpan, Innovation,
};
pub use observations::ObservationSeries;

use crate::error::FilterError;
use crate::models::{CandidateModel, ParamVector};

/// Default computational grid step (s): ten substeps per 25 Hz sample.
pub const DEFAULT_GRID_DT: f64 = 0.004;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSettings {
    pub grid_dt: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings {
            grid_dt: DEFAULT_GRID_DT,
        }
    }
}

fn model_setup(
    model: &CandidateModel,
    theta: &[f64],
    data: &ObservationSeries,
    settings: &FilterSettings,
) -> Result<(crate::models::BoundModel, GaussianBelief, GridSpan), FilterError> {
    let bound = model.bind(theta)?;
    let first = data.values().first().copied().unwrap_or(0.0);
    let initial = bound.initial_belief(first, data.noise_std(), model.initial_config());
    Ok((bound, initial, GridSpan::covering(data, settings.grid_dt)))
}

/// Runs a candidate model's filter over the whole record, starting from the
/// initial belief built from `theta` and the first observation.
pub fn run_filter(
    model: &CandidateModel,
    theta: &[f64],
    data: &ObservationSeries,
    settings: &FilterSettings,
) -> Result<FilterResult, FilterError> {
    let (bound, initial, span) = model_setup(model, theta, data, settings)?;
    run_dynamics_filter(&bound, initial, data, &span)
}

/// `ln p(D | theta, M)`; any filter failure maps to `-inf` so that diverging
/// parameter draws simply receive zero weight.
pub fn log_likelihood(model: &CandidateModel, theta: &[f64], data: &ObservationSeries, settings: &FilterSettings) -> f64 {
    model_setup(model, theta, data, settings)
        .and_then(|(bound, initial, span)| dynamics_log_likelihood(&bound, initial, data, &span))
        .unwrap_or(f64::NEG_INFINITY)
}

/// One row of a `mean +- 3 std` band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub t: f64,
    pub mean: f64,
    pub lo3: f64,
    pub hi3: f64,
}

/// Band of state slot `slot` over every grid point of a recorded run.
pub fn state_band(result: &FilterResult, slot: usize) -> Vec<BandRow> {
    result
        .beliefs
        .iter()
        .map(|g| {
            let b = g.current();
            let mean = b.mean()[slot];
            let half = 3.0 * b.std(slot);
            BandRow {
                t: g.t,
                mean,
                lo3: mean - half,
                hi3: mean + half,
            }
        })
        .collect()
}

/// Reruns the filter at `theta` (typically the MAP sample) and returns the
/// band of the named state slot (`u`, `v`, `f` or `K`, depending on model).
pub fn trajectory_at(
    theta: &ParamVector,
    model: &CandidateModel,
    data: &ObservationSeries,
    settings: &FilterSettings,
    slot: &str,
) -> Result<Vec<BandRow>, FilterError> {
    let index = model
        .layout()
        .slot_index(slot)
        .ok_or_else(|| FilterError::UnknownSlot(slot.to_string()))?;
    model.bind_params(theta)?;
    let result = run_filter(model, &theta.values(), data, settings)?;
    Ok(state_band(&result, index))
}
