//! Central finite-difference Jacobians.
//!
//! Test oracles for the analytic Jacobians; the filter never calls these.

use super::{Dynamics, NoiseMat, NoiseVec, StateMat, StateVec};

fn step_size(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

pub fn jacobian_state<D: Dynamics>(dynamics: &D, x: &StateVec, t: f64, dt: f64) -> StateMat {
    let xi = NoiseVec::zeros();
    let mut jac = StateMat::zeros();
    for j in 0..dynamics.n_state() {
        let h = step_size(x[j]);
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += h;
        minus[j] -= h;
        let diff = (dynamics.step(&plus, t, dt, &xi) - dynamics.step(&minus, t, dt, &xi)) / (plus[j] - minus[j]);
        jac.set_column(j, &diff);
    }
    jac
}

pub fn jacobian_noise<D: Dynamics>(dynamics: &D, x: &StateVec, t: f64, dt: f64) -> NoiseMat {
    let mut jac = NoiseMat::zeros();
    for j in 0..dynamics.n_noise() {
        let h = 1e-6;
        let mut plus = NoiseVec::zeros();
        let mut minus = NoiseVec::zeros();
        plus[j] = h;
        minus[j] = -h;
        let diff = (dynamics.step(x, t, dt, &plus) - dynamics.step(x, t, dt, &minus)) / (2.0 * h);
        jac.set_column(j, &diff);
    }
    jac
}

/// Max-norm relative error `|a - b|_max / max(|a|_max, 1e-300)`.
pub fn relative_error<const R: usize, const C: usize>(
    analytic: &nalgebra::SMatrix<f64, R, C>,
    numeric: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    let scale = analytic.abs().max().max(1e-300);
    (analytic - numeric).abs().max() / scale
}
