use nalgebra::DMatrix;

use crate::error::FilterError;
use crate::models::{StateMat, StateVec, MAX_STATE};

/// Gaussian belief `N(mean, cov)` over the (augmented) state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    dim: usize,
    mean: StateVec,
    cov: StateMat,
}

impl GaussianBelief {
    /// `cov` is row-major `dim x dim` and must be symmetric to 1e-12.
    pub fn new(mean: &[f64], cov: &[f64]) -> Result<Self, FilterError> {
        let dim = mean.len();
        if dim == 0 || dim > MAX_STATE || cov.len() != dim * dim {
            return Err(FilterError::InvalidGrid(format!(
                "belief needs 1..={MAX_STATE} states and a square covariance, got {} and {}",
                dim,
                cov.len()
            )));
        }
        let mut m = StateVec::zeros();
        let mut p = StateMat::zeros();
        for i in 0..dim {
            m[i] = mean[i];
            for j in 0..dim {
                p[(i, j)] = cov[i * dim + j];
            }
        }
        if (p - p.transpose()).abs().max() > 1e-12 {
            return Err(FilterError::InvalidGrid("covariance is not symmetric".into()));
        }
        Ok(GaussianBelief { dim, mean: m, cov: p })
    }

    pub(crate) fn from_parts(dim: usize, mean: StateVec, cov: StateMat) -> Self {
        GaussianBelief { dim, mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean.as_slice()[..self.dim]
    }

    pub fn mean_vec(&self) -> &StateVec {
        &self.mean
    }

    pub fn cov_mat(&self) -> &StateMat {
        &self.cov
    }

    pub fn cov_entry(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim, "covariance index out of range");
        self.cov[(i, j)]
    }

    pub fn cov(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.cov[(i, j)])
    }

    pub fn std(&self, i: usize) -> f64 {
        self.cov_entry(i, i).max(0.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && self.cov.iter().all(|v| v.is_finite())
    }

    pub fn asymmetry(&self) -> f64 {
        (self.cov - self.cov.transpose()).abs().max()
    }

    pub(crate) fn symmetrize(&mut self) {
        self.cov = 0.5 * (self.cov + self.cov.transpose());
    }
}
