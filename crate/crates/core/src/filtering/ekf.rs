use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{GaussianBelief, ObservationSeries};
use crate::error::FilterError;
use crate::models::{Dynamics, NoiseVec, StateMat};

const LN_2PI: f64 = 1.8378770664093453;

/// Propagates a belief one grid step from time `t` with `Q = I`.
pub fn forecast<D: Dynamics>(
    belief: &GaussianBelief,
    dynamics: &D,
    t: f64,
    dt: f64,
) -> Result<GaussianBelief, FilterError> {
    forecast_at(belief, dynamics, t, dt).ok_or(FilterError::Diverged { grid_index: 0, t })
}

#[inline]
fn forecast_at<D: Dynamics>(belief: &GaussianBelief, dynamics: &D, t: f64, dt: f64) -> Option<GaussianBelief> {
    let x = belief.mean_vec();
    let a = dynamics.jacobian_state(x, t, dt);
    let b = dynamics.jacobian_noise(x, t, dt);
    let mean = dynamics.step(x, t, dt, &NoiseVec::zeros());
    let cov = a * belief.cov_mat() * a.transpose() + b * b.transpose();
    let mut next = GaussianBelief::from_parts(belief.dim(), mean, cov);
    next.symmetrize();
    next.is_finite().then_some(next)
}

/// Result of a single analysis step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analysis {
    pub belief: GaussianBelief,
    pub log_lik_increment: f64,
    pub residual: f64,
    /// Predictive variance `C P C^T + D Gamma D^T`.
    pub variance: f64,
}

/// Kalman update with observation `d` and sensor variance `noise_var`.
///
/// The covariance update uses the Joseph form.
pub fn analyze<D: Dynamics>(
    belief: &GaussianBelief,
    dynamics: &D,
    d: f64,
    noise_var: f64,
) -> Result<Analysis, FilterError> {
    let c = dynamics.measurement_row();
    let p = belief.cov_mat();
    let pct = p * c.transpose();
    let variance = (c * pct)[0] + noise_var;
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(FilterError::InnovationVariance { grid_index: 0, variance });
    }
    let residual = d - dynamics.measure(belief.mean_vec());
    let gain = pct / variance;
    let mean = belief.mean_vec() + gain * residual;
    let i_kc = StateMat::identity() - gain * c;
    let cov = i_kc * p * i_kc.transpose() + gain * gain.transpose() * noise_var;
    let mut updated = GaussianBelief::from_parts(belief.dim(), mean, cov);
    updated.symmetrize();
    let log_lik_increment = -0.5 * (LN_2PI + variance.ln() + residual * residual / variance);
    Ok(Analysis {
        belief: updated,
        log_lik_increment,
        residual,
        variance,
    })
}

/// Log density of `N(x | mean, var)`.
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * ((2.0 * PI * var).ln() + r * r / var)
}

/// Uniform computational grid `start + k dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpan {
    pub start: f64,
    pub end: f64,
    pub dt: f64,
}

const GRID_TOL: f64 = 1e-9;

impl GridSpan {
    /// The span covering all observations, starting at the first.
    pub fn covering(data: &ObservationSeries, dt: f64) -> Self {
        let start = data.times().first().copied().unwrap_or(0.0);
        let end = data.times().last().copied().unwrap_or(start);
        GridSpan { start, end, dt }
    }

    pub fn n_steps(&self) -> Result<usize, FilterError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FilterError::InvalidGrid(format!("grid step must be positive, got {}", self.dt)));
        }
        if !(self.end >= self.start) {
            return Err(FilterError::InvalidGrid(format!("end {} precedes start {}", self.end, self.start)));
        }
        self.index_of(self.end).ok_or(FilterError::OffGrid {
            t: self.end,
            start: self.start,
            dt: self.dt,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    fn index_of(&self, t: f64) -> Option<usize> {
        let offset = t - self.start;
        let steps = (offset / self.dt).round();
        if steps < 0.0 {
            return None;
        }
        let err = (steps * self.dt - offset).abs();
        (err <= GRID_TOL * offset.abs().max(self.dt)).then_some(steps as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Innovation {
    pub t: f64,
    pub residual: f64,
    pub variance: f64,
}

/// Belief at one grid point: the forecast (the initial belief at index 0)
/// and, where an observation was assimilated, the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBelief {
    pub t: f64,
    pub forecast: GaussianBelief,
    pub analysis: Option<GaussianBelief>,
}

impl GridBelief {
    /// The latest belief at this grid point.
    pub fn current(&self) -> &GaussianBelief {
        self.analysis.as_ref().unwrap_or(&self.forecast)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    pub log_lik: f64,
    pub beliefs: Vec<GridBelief>,
    pub innovations: Vec<Innovation>,
}

impl FilterResult {
    pub fn final_belief(&self) -> Option<&GaussianBelief> {
        self.beliefs.last().map(GridBelief::current)
    }
}

/// Maps each observation onto the grid; indices must be strictly increasing.
fn observation_indices(span: &GridSpan, data: &ObservationSeries) -> Result<Vec<usize>, FilterError> {
    let n_steps = span.n_steps()?;
    let mut out = Vec::with_capacity(data.len());
    for &t in data.times() {
        let off_grid = || FilterError::OffGrid {
            t,
            start: span.start,
            dt: span.dt,
        };
        let k = span.index_of(t).ok_or_else(off_grid)?;
        if k > n_steps || out.last().is_some_and(|&prev| prev >= k) {
            return Err(off_grid());
        }
        out.push(k);
    }
    Ok(out)
}

fn filter_loop<D: Dynamics>(
    dynamics: &D,
    initial: GaussianBelief,
    data: &ObservationSeries,
    span: &GridSpan,
    mut record: Option<(&mut Vec<GridBelief>, &mut Vec<Innovation>)>,
) -> Result<f64, FilterError> {
    let n_steps = span.n_steps()?;
    let indices = observation_indices(span, data)?;
    let noise_var = data.noise_var();
    let values = data.values();
    let mut next_obs = 0;
    let mut belief = initial;
    let mut log_lik = 0.0;

    if let Some((beliefs, innovations)) = record.as_mut() {
        beliefs.reserve(n_steps + 1);
        innovations.reserve(data.len());
    }

    for k in 0..=n_steps {
        let t = span.time(k);
        if k > 0 {
            belief = forecast_at(&belief, dynamics, span.time(k - 1), span.dt)
                .ok_or(FilterError::Diverged { grid_index: k, t })?;
        }
        let forecast = belief;
        let mut analysis = None;
        if next_obs < indices.len() && indices[next_obs] == k {
            let a = analyze(&belief, dynamics, values[next_obs], noise_var).map_err(|e| match e {
                FilterError::InnovationVariance { variance, .. } => {
                    FilterError::InnovationVariance { grid_index: k, variance }
                }
                other => other,
            })?;
            if !a.belief.is_finite() || !a.log_lik_increment.is_finite() {
                return Err(FilterError::Diverged { grid_index: k, t });
            }
            log_lik += a.log_lik_increment;
            belief = a.belief;
            analysis = Some(a.belief);
            if let Some((_, innovations)) = record.as_mut() {
                innovations.push(Innovation {
                    t,
                    residual: a.residual,
                    variance: a.variance,
                });
            }
            next_obs += 1;
        }
        if let Some((beliefs, _)) = record.as_mut() {
            beliefs.push(GridBelief { t, forecast, analysis });
        }
    }
    Ok(log_lik)
}

/// Runs the filter over `span` from `initial` (the belief at `span.start`),
/// alternating grid forecasts with analyses at observation times. An
/// observation at `span.start` is assimilated into the initial belief.
pub fn run_dynamics_filter<D: Dynamics>(
    dynamics: &D,
    initial: GaussianBelief,
    data: &ObservationSeries,
    span: &GridSpan,
) -> Result<FilterResult, FilterError> {
    let mut beliefs = Vec::new();
    let mut innovations = Vec::new();
    let log_lik = filter_loop(dynamics, initial, data, span, Some((&mut beliefs, &mut innovations)))?;
    Ok(FilterResult {
        log_lik,
        beliefs,
        innovations,
    })
}

/// Log-likelihood only, without recording trajectories.
pub fn dynamics_log_likelihood<D: Dynamics>(
    dynamics: &D,
    initial: GaussianBelief,
    data: &ObservationSeries,
    span: &GridSpan,
) -> Result<f64, FilterError> {
    filter_loop(dynamics, initial, data, span, None)
}
