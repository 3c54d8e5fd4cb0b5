//! Candidate state-space models for the single-degree-of-freedom oscillator
//! `m u'' + c u' + K(t) u = f(t)` and the data-generating truth dynamics.
//!
//! All models are Euler-Maruyama discretisations written as
//! `x_{k+1} = g(x_k, t_k, dt, xi_k)` with `xi_k` a vector of independent unit
//! Gaussians. Scaling of the noise (sigma, gamma, sqrt(dt)) lives entirely in
//! the noise Jacobian `B = dg/dxi`, so the filter uses `Q = I`.
//!
//! States are stored in fixed-size buffers of length [`MAX_STATE`]; a model
//! with fewer slots leaves the trailing entries at zero and its Jacobians
//! have zero rows/columns there.

mod candidate;
pub mod finite_diff;
mod params;
mod schedule;

use nalgebra::{Matrix3, Matrix3x2, RowVector3, Vector2, Vector3};

pub use candidate::{
    BoundModel, CandidateModel, FixedSettings, InitialBeliefConfig, ModelId, ModelVariant, StateLayout,
    Structure, DEFAULT_INITIAL_STIFFNESS, MASS,
};
pub use params::{log_prior, sample_prior, ParamVector, PriorSpec, UniformBound};
pub use schedule::{eval_stiffness, StiffnessSchedule, LINEAR_HORIZON};

pub const MAX_STATE: usize = 3;
pub const MAX_NOISE: usize = 2;

pub type StateVec = Vector3<f64>;
pub type StateMat = Matrix3<f64>;
pub type NoiseVec = Vector2<f64>;
pub type NoiseMat = Matrix3x2<f64>;
pub type MeasRow = RowVector3<f64>;

/// A discrete-time stochastic map with a linear, additive-noise displacement
/// measurement `d = C x + D eps`, `D = 1`.
pub trait Dynamics {
    fn n_state(&self) -> usize;

    fn n_noise(&self) -> usize;

    fn step(&self, x: &StateVec, t: f64, dt: f64, xi: &NoiseVec) -> StateVec;

    /// `dg/dx` at `xi = 0`.
    fn jacobian_state(&self, x: &StateVec, t: f64, dt: f64) -> StateMat;

    /// `dg/dxi` at `xi = 0`.
    fn jacobian_noise(&self, x: &StateVec, t: f64, dt: f64) -> NoiseMat;

    fn measurement_row(&self) -> MeasRow {
        MeasRow::new(1.0, 0.0, 0.0)
    }

    fn measure(&self, x: &StateVec) -> f64 {
        (self.measurement_row() * x)[0]
    }
}

/// Displacement is the first state slot.
pub fn measure(x: &[f64]) -> f64 {
    x[0]
}
