//! Transitional MCMC: tempering from the prior (`p = 0`) to the posterior
//! (`p = 1`) through adaptively chosen exponents.
//!
//! Each transition picks the next exponent so that the plausibility weights
//! have a fixed coefficient of variation, resamples the population by those
//! weights, and moves every chain with Metropolis-Hastings steps whose
//! Gaussian proposal is the scaled weighted sample covariance. The log-means
//! of the weights accumulate to the log evidence.
//!
//! Randomness is drawn from one counter-derived substream per
//! (stage, sample index), so runs are identical for any thread count.

mod proposal;
mod schedule;
mod weights;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use proposal::{log_acceptance, mh_step, proposal_covariance, ChainState, ProposalKernel};
pub use schedule::{next_exponent, weight_cov, EXPONENT_TOL};
pub use weights::{log_mean_exp, plausibility_weights, PlausibilityWeights};

use crate::error::TmcmcError;
use crate::io::ext;
use crate::models::{PriorSpec, UniformBound};
use crate::rng::{substream, SampleRng, SEQUENTIAL};

/// A prior and likelihood over a flat parameter vector.
pub trait BayesTarget: Sync {
    fn dim(&self) -> usize;
    /// `-inf` outside the support.
    fn log_prior(&self, theta: &[f64]) -> f64;
    /// May return `-inf`.
    fn log_likelihood(&self, theta: &[f64]) -> f64;
    fn sample_prior(&self, rng: &mut SampleRng) -> Vec<f64>;
}

/// Uniform-box prior paired with a likelihood closure.
pub struct FnTarget<L> {
    prior: PriorSpec,
    log_lik: L,
}

impl<L: Fn(&[f64]) -> f64 + Sync> FnTarget<L> {
    pub fn new(prior: PriorSpec, log_lik: L) -> Self {
        FnTarget { prior, log_lik }
    }

    /// Box prior with parameters named `x0, x1, ...`.
    ///
    /// Panics if a bound has `lo >= hi`.
    pub fn uniform_box(bounds: Vec<(f64, f64)>, log_lik: L) -> Self {
        let bounds = bounds
            .into_iter()
            .enumerate()
            .map(|(i, (lo, hi))| UniformBound {
                name: format!("x{i}"),
                lo,
                hi,
            })
            .collect();
        FnTarget::new(PriorSpec::new(bounds).expect("valid box bounds"), log_lik)
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }
}

impl<L: Fn(&[f64]) -> f64 + Sync> BayesTarget for FnTarget<L> {
    fn dim(&self) -> usize {
        self.prior.dim()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_density(theta)
    }
    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (self.log_lik)(theta)
    }
    fn sample_prior(&self, rng: &mut SampleRng) -> Vec<f64> {
        self.prior.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TmcmcConfig {
    pub n_samples: usize,
    pub beta: f64,
    pub target_cov: f64,
    pub max_stages: usize,
    pub seed: u64,
    /// Metropolis-Hastings moves per chain per stage.
    pub mh_steps: usize,
}

impl Default for TmcmcConfig {
    fn default() -> Self {
        TmcmcConfig {
            n_samples: 1000,
            beta: 0.2,
            target_cov: 1.0,
            max_stages: 100,
            seed: 0,
            mh_steps: 1,
        }
    }
}

impl TmcmcConfig {
    pub fn validate(&self) -> Result<(), TmcmcError> {
        let fail = |msg: String| Err(TmcmcError::InvalidConfig(msg));
        if self.n_samples < 100 {
            return fail(format!("n_samples must be at least 100, got {}", self.n_samples));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return fail(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.target_cov > 0.0) || !self.target_cov.is_finite() {
            return fail(format!("target_cov must be positive, got {}", self.target_cov));
        }
        if self.max_stages < 1 {
            return fail("max_stages must be at least 1".into());
        }
        if self.mh_steps < 1 {
            return fail("mh_steps must be at least 1".into());
        }
        if self.n_samples > u32::MAX as usize - 1 || self.max_stages > u32::MAX as usize - 1 {
            return fail("n_samples and max_stages must fit in 32 bits".into());
        }
        Ok(())
    }
}

/// Population at one tempering exponent. Stage 0 holds the prior draws;
/// stage `j > 0` records the transition from stage `j - 1`: the weights on
/// the previous population, the evidence increment, and the proposal used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub p: f64,
    pub samples: Vec<Vec<f64>>,
    #[serde(with = "ext::reals")]
    pub log_liks: Vec<f64>,
    pub weights: Vec<f64>,
    pub acceptance_rate: f64,
    #[serde(with = "ext::real")]
    pub log_evidence_increment: f64,
    /// Coefficient of variation of the (unnormalized) weights.
    #[serde(with = "ext::real")]
    pub weight_cov: f64,
    /// Row-major proposal covariance; empty for stage 0.
    pub proposal_cov: Vec<f64>,
}

/// Summary of one stage for diagnostics dumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: usize,
    pub p: f64,
    #[serde(with = "ext::real")]
    pub weight_cov: f64,
    pub acceptance_rate: f64,
    #[serde(with = "ext::real")]
    pub log_evidence_increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmcmcRun {
    pub stages: Vec<Stage>,
    #[serde(with = "ext::real")]
    pub log_evidence: f64,
}

impl TmcmcRun {
    pub fn final_stage(&self) -> &Stage {
        self.stages.last().expect("a run always holds the prior stage")
    }

    pub fn is_complete(&self) -> bool {
        self.final_stage().p == 1.0
    }

    pub fn posterior_samples(&self) -> &[Vec<f64>] {
        &self.final_stage().samples
    }

    pub fn posterior_log_liks(&self) -> &[f64] {
        &self.final_stage().log_liks
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.p).collect()
    }

    /// Number of tempering transitions `m`.
    pub fn n_transitions(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.stages[0].samples.first().map_or(0, Vec::len)
    }

    /// Proposal covariance of the last transition.
    pub fn final_proposal_cov(&self) -> Option<DMatrix<f64>> {
        let cov = &self.final_stage().proposal_cov;
        let d = self.dim();
        (!cov.is_empty() && cov.len() == d * d).then(|| DMatrix::from_row_slice(d, d, cov))
    }

    pub fn summary(&self) -> Vec<StageSummary> {
        self.stages
            .iter()
            .enumerate()
            .map(|(i, s)| StageSummary {
                stage: i,
                p: s.p,
                weight_cov: s.weight_cov,
                acceptance_rate: s.acceptance_rate,
                log_evidence_increment: s.log_evidence_increment,
            })
            .collect()
    }
}

/// Draws `n` indices with probabilities proportional to `weights`.
pub fn resample_multinomial<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w.max(0.0);
        cumulative.push(acc);
    }
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            // First index whose cumulative weight exceeds u; zero-weight
            // entries share their predecessor's cumulative value and are skipped.
            cumulative.partition_point(|&c| c <= u).min(weights.len() - 1)
        })
        .collect()
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Runs the sampler to `p = 1`. Exceeding `max_stages` transitions returns
/// [`TmcmcError::StageLimit`] carrying the partial run.
pub fn run<T: BayesTarget + ?Sized>(target: &T, config: &TmcmcConfig) -> Result<TmcmcRun, TmcmcError> {
    config.validate()?;
    let n = config.n_samples;
    let seed = config.seed;

    let prior_states: Vec<ChainState> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, 0, k as u32);
            ChainState::evaluate(target, target.sample_prior(&mut rng))
        })
        .collect();
    let mut stages = vec![stage_from_states(0.0, &prior_states, vec![1.0 / n as f64; n], 1.0, 0.0, 0.0, Vec::new())];
    let mut states = prior_states;
    let mut log_evidence = 0.0;

    while stages.last().expect("nonempty").p < 1.0 {
        let j = stages.len();
        let prev = stages.last().expect("nonempty");
        if j > config.max_stages {
            let p = prev.p;
            return Err(TmcmcError::StageLimit {
                max_stages: config.max_stages,
                p,
                partial: Box::new(TmcmcRun { stages, log_evidence }),
            });
        }
        let p_prev = prev.p;
        let p = next_exponent(&prev.log_liks, p_prev, config.target_cov).map_err(|e| match e {
            TmcmcError::NoViableSamples { .. } => TmcmcError::NoViableSamples { stage: j - 1 },
            other => other,
        })?;
        let dp = p - p_prev;
        let achieved = weight_cov(&prev.log_liks, dp);
        let w = plausibility_weights(&prev.log_liks, dp);
        let kernel = ProposalKernel::new(proposal_covariance(&prev.samples, &w.normalized, config.beta)?)?;

        let mut rng = substream(seed, j as u32, SEQUENTIAL);
        let starts = resample_multinomial(&w.normalized, n, &mut rng);
        let moved: Vec<(ChainState, usize)> = starts
            .par_iter()
            .enumerate()
            .map(|(k, &start)| {
                let mut rng = substream(seed, j as u32, k as u32);
                let mut state = states[start].clone();
                let mut accepted = 0;
                for _ in 0..config.mh_steps {
                    let (next, ok) = mh_step(target, &state, &kernel, p, &mut rng);
                    state = next;
                    accepted += ok as usize;
                }
                (state, accepted)
            })
            .collect();
        let accepted: usize = moved.iter().map(|(_, a)| a).sum();
        states = moved.into_iter().map(|(s, _)| s).collect();
        log_evidence += w.log_mean;
        let rate = accepted as f64 / (n * config.mh_steps) as f64;
        stages.push(stage_from_states(
            p,
            &states,
            w.normalized,
            rate,
            w.log_mean,
            achieved,
            row_major(kernel.cov()),
        ));
    }
    Ok(TmcmcRun { stages, log_evidence })
}

fn stage_from_states(
    p: f64,
    states: &[ChainState],
    weights: Vec<f64>,
    acceptance_rate: f64,
    log_evidence_increment: f64,
    weight_cov: f64,
    proposal_cov: Vec<f64>,
) -> Stage {
    Stage {
        p,
        samples: states.iter().map(|s| s.theta.clone()).collect(),
        log_liks: states.iter().map(|s| s.log_lik).collect(),
        weights,
        acceptance_rate,
        log_evidence_increment,
        weight_cov,
        proposal_cov,
    }
}
