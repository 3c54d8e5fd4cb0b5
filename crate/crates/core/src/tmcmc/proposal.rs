use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::BayesTarget;
use crate::error::TmcmcError;

const LN_2PI: f64 = 1.8378770664093453;

/// Gaussian random-walk proposal `N(theta, cov)` with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalKernel {
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl ProposalKernel {
    /// Factorizes `cov`, adding `1e-10 * trace` to the diagonal if the plain
    /// factorization fails.
    pub fn new(cov: DMatrix<f64>) -> Result<Self, TmcmcError> {
        if !cov.is_square() || cov.nrows() == 0 {
            return Err(TmcmcError::DegenerateCovariance(format!(
                "covariance must be square and nonempty, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(TmcmcError::DegenerateCovariance("non-finite covariance entry".into()));
        }
        let cov = 0.5 * (&cov + cov.transpose());
        let attempt = |m: &DMatrix<f64>| m.clone().cholesky().map(|c| c.l());
        let (cov, chol) = match attempt(&cov) {
            Some(l) => (cov, l),
            None => {
                let jitter = 1e-10 * cov.trace();
                let mut jittered = cov.clone();
                for i in 0..jittered.nrows() {
                    jittered[(i, i)] += jitter;
                }
                match (jitter > 0.0).then(|| attempt(&jittered)).flatten() {
                    Some(l) => (jittered, l),
                    None => {
                        return Err(TmcmcError::DegenerateCovariance(format!(
                            "not positive definite even with jitter {jitter:e} (trace {:e})",
                            cov.trace()
                        )))
                    }
                }
            }
        };
        let log_det = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(ProposalKernel { cov, chol, log_det })
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Draws `center + L z`.
    pub fn propose<R: Rng + ?Sized>(&self, center: &[f64], rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = &self.chol * z;
        center.iter().zip(step.iter()).map(|(c, s)| c + s).collect()
    }

    /// `ln N(to | from, cov)`.
    pub fn log_density(&self, from: &[f64], to: &[f64]) -> f64 {
        let r = DVector::from_iterator(self.dim(), to.iter().zip(from).map(|(a, b)| a - b));
        let y = self
            .chol
            .solve_lower_triangular(&r)
            .expect("Cholesky factor has a positive diagonal");
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det + y.norm_squared())
    }
}

/// Scaled weighted sample covariance `beta^2 sum_k w_k (x_k - mu)(x_k - mu)^T`.
pub fn proposal_covariance(samples: &[Vec<f64>], weights: &[f64], beta: f64) -> Result<DMatrix<f64>, TmcmcError> {
    if samples.len() != weights.len() || samples.len() < 2 {
        return Err(TmcmcError::DegenerateCovariance(format!(
            "need at least two weighted samples, got {} samples and {} weights",
            samples.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(TmcmcError::DegenerateCovariance(format!("total weight is {total}")));
    }
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive < 2 {
        return Err(TmcmcError::DegenerateCovariance(
            "all weight sits on a single sample (effective sample size 1)".into(),
        ));
    }
    let dim = samples[0].len();
    let mut mean = DVector::zeros(dim);
    for (x, &w) in samples.iter().zip(weights) {
        mean += DVector::from_column_slice(x) * (w / total);
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (x, &w) in samples.iter().zip(weights) {
        if w > 0.0 {
            let d = DVector::from_column_slice(x) - &mean;
            cov += (&d * d.transpose()) * (w / total);
        }
    }
    cov *= beta * beta;
    Ok(0.5 * (&cov + cov.transpose()))
}

/// A chain position with its cached prior and likelihood values.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub log_prior: f64,
    pub log_lik: f64,
}

impl ChainState {
    pub fn evaluate<T: BayesTarget + ?Sized>(target: &T, theta: Vec<f64>) -> Self {
        let log_prior = target.log_prior(&theta);
        let log_lik = if log_prior.is_finite() {
            target.log_likelihood(&theta)
        } else {
            f64::NEG_INFINITY
        };
        ChainState {
            theta,
            log_prior,
            log_lik,
        }
    }

    /// `log_prior + p * log_lik`, with `0 * -inf` read as zero.
    pub fn tempered(&self, p: f64) -> f64 {
        if p == 0.0 {
            self.log_prior
        } else {
            self.log_prior + p * self.log_lik
        }
    }
}

/// Log acceptance ratio `min(0, tempered(to) - tempered(from))`; `-inf` when
/// the proposal has zero tempered density.
pub fn log_acceptance(from: &ChainState, to: &ChainState, p: f64) -> f64 {
    let new = to.tempered(p);
    if new == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let diff = new - from.tempered(p);
    if diff.is_nan() {
        // The current state itself has zero density; any viable move is taken.
        0.0
    } else {
        diff.min(0.0)
    }
}

/// One Metropolis-Hastings move targeting `prior * likelihood^p`. Proposals
/// outside the prior support are rejected without evaluating the likelihood.
pub fn mh_step<T: BayesTarget + ?Sized, R: Rng + ?Sized>(
    target: &T,
    current: &ChainState,
    kernel: &ProposalKernel,
    p: f64,
    rng: &mut R,
) -> (ChainState, bool) {
    let theta = kernel.propose(&current.theta, rng);
    let proposed = ChainState::evaluate(target, theta);
    let log_alpha = log_acceptance(current, &proposed, p);
    let u: f64 = rng.random();
    if u.ln() < log_alpha {
        (proposed, true)
    } else {
        (current.clone(), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::tmcmc::FnTarget;
    use proptest::prelude::*;
    use rand::Rng;

    fn gaussian_target(lo: f64, hi: f64) -> impl BayesTarget {
        FnTarget::uniform_box(vec![(lo, hi)], |x: &[f64]| -0.5 * x[0] * x[0])
    }

    #[test]
    fn two_point_covariance() {
        let cov = proposal_covariance(&[vec![0.0], vec![2.0]], &[0.5, 0.5], 1.0).unwrap();
        assert_eq!(cov[(0, 0)], 1.0);
        let cov2 = proposal_covariance(&[vec![0.0], vec![2.0]], &[3.0, 3.0], 2.0).unwrap();
        assert_eq!(cov2[(0, 0)], 4.0);
    }

    #[test]
    fn concentrated_weights_are_degenerate() {
        let err = proposal_covariance(&[vec![0.0], vec![2.0], vec![5.0]], &[0.0, 1.0, 0.0], 0.2);
        assert!(matches!(err, Err(TmcmcError::DegenerateCovariance(_))));
        // Two distinct weighted points that coincide: zero covariance even after jitter.
        let cov = proposal_covariance(&[vec![1.0], vec![1.0]], &[0.5, 0.5], 0.2).unwrap();
        assert!(ProposalKernel::new(cov).is_err());
    }

    #[test]
    fn rank_deficient_covariance_is_jittered() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let k = ProposalKernel::new(cov).unwrap();
        assert!(k.cov()[(0, 0)] > 1.0);
    }

    #[test]
    fn kernel_density_matches_closed_form() {
        let k = ProposalKernel::new(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0])).unwrap();
        let expected = -LN_2PI - 0.5 * 36f64.ln() - 0.5 * (1.0 / 4.0 + 4.0 / 9.0);
        assert!((k.log_density(&[0.0, 0.0], &[1.0, 2.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn equal_tempered_density_is_always_accepted() {
        let a = ChainState {
            theta: vec![0.0],
            log_prior: -1.0,
            log_lik: -3.0,
        };
        let b = ChainState {
            theta: vec![1.0],
            log_prior: -2.0,
            log_lik: -1.0,
        };
        assert_eq!(log_acceptance(&a, &b, 0.5), 0.0);
        let target = FnTarget::uniform_box(vec![(-10.0, 10.0)], |_: &[f64]| -4.0);
        let kernel = ProposalKernel::new(DMatrix::from_element(1, 1, 0.01)).unwrap();
        let start = ChainState::evaluate(&target, vec![0.0]);
        let mut rng = substream(1, 0, 0);
        for _ in 0..100 {
            assert!(mh_step(&target, &start, &kernel, 0.7, &mut rng).1);
        }
    }

    #[test]
    fn proposals_outside_the_box_are_rejected() {
        let target = gaussian_target(-1.0, 1.0);
        // Start at the edge with a huge step: almost all proposals leave the box.
        let kernel = ProposalKernel::new(DMatrix::from_element(1, 1, 1e6)).unwrap();
        let start = ChainState::evaluate(&target, vec![1.0]);
        let mut rng = substream(2, 0, 0);
        for _ in 0..200 {
            let (next, accepted) = mh_step(&target, &start, &kernel, 1.0, &mut rng);
            assert!(next.theta[0].abs() <= 1.0);
            if next.theta[0].abs() > 1.0 {
                assert!(!accepted);
            }
        }
    }

    #[test]
    fn standard_normal_acceptance_rate_is_moderate() {
        // Tune the proposal from exact draws of the target, at the 1-D optimal scale.
        let mut rng = substream(3, 0, 0);
        let draws: Vec<Vec<f64>> = (0..5000).map(|_| vec![rng.sample::<f64, _>(StandardNormal)]).collect();
        let cov = proposal_covariance(&draws, &vec![1.0; draws.len()], 2.38).unwrap();
        let kernel = ProposalKernel::new(cov).unwrap();
        let target = gaussian_target(-100.0, 100.0);
        let mut state = ChainState::evaluate(&target, vec![0.0]);
        let mut accepted = 0;
        for _ in 0..10_000 {
            let (next, ok) = mh_step(&target, &state, &kernel, 1.0, &mut rng);
            state = next;
            accepted += ok as usize;
        }
        let rate = accepted as f64 / 1e4;
        assert!((0.2..=0.7).contains(&rate), "acceptance rate {rate}");
    }

    proptest! {
        #[test]
        fn acceptance_ignores_likelihood_offsets(
            la in -1e3f64..0.0, lb in -1e3f64..0.0,
            pa in -10.0f64..0.0, pb in -10.0f64..0.0,
            p in 0.01f64..1.0, c in -1e4f64..1e4,
        ) {
            let s = |lp, ll| ChainState { theta: vec![], log_prior: lp, log_lik: ll };
            let a = log_acceptance(&s(pa, la), &s(pb, lb), p);
            let b = log_acceptance(&s(pa, la + c), &s(pb, lb + c), p);
            prop_assert!((a - b).abs() < 1e-8 * (1.0 + c.abs()));
        }
    }
}
