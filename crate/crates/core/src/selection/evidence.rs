use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SelectionError;
use crate::io::ext;
use crate::tmcmc::{log_mean_exp, BayesTarget, ProposalKernel, TmcmcRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceEstimator {
    Stagewise,
    ChibJeliazkov,
}

/// Log evidence split into average data fit and information gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceReport {
    #[serde(with = "ext::real")]
    pub log_evidence: f64,
    /// Posterior mean of the log-likelihood.
    #[serde(with = "ext::real")]
    pub avg_data_fit: f64,
    /// KL divergence of the posterior from the prior.
    #[serde(with = "ext::real")]
    pub info_gain: f64,
    pub estimator: EvidenceEstimator,
}

/// Sum over transitions of `ln mean_k exp(dp_j log_lik_{j-1,k})`, recomputed
/// from the stored populations.
pub fn log_evidence_stagewise(run: &TmcmcRun) -> Result<f64, SelectionError> {
    let last = run.final_stage().p;
    if last != 1.0 {
        return Err(SelectionError::IncompleteRun(last));
    }
    let mut total = 0.0;
    for pair in run.stages.windows(2) {
        let dp = pair[1].p - pair[0].p;
        let scaled: Vec<f64> = pair[0].log_liks.iter().map(|&l| if l.is_finite() { dp * l } else { l }).collect();
        total += log_mean_exp(&scaled);
    }
    Ok(total)
}

/// Average data fit and the information gain implied by `log_evidence`.
pub fn occam_decompose(posterior_log_liks: &[f64], log_evidence: f64) -> Result<EvidenceReport, SelectionError> {
    occam_decompose_with(posterior_log_liks, log_evidence, EvidenceEstimator::Stagewise)
}

pub fn occam_decompose_with(
    posterior_log_liks: &[f64],
    log_evidence: f64,
    estimator: EvidenceEstimator,
) -> Result<EvidenceReport, SelectionError> {
    if posterior_log_liks.is_empty() {
        return Err(SelectionError::Empty("posterior log-likelihoods"));
    }
    let avg_data_fit = posterior_log_liks.iter().sum::<f64>() / posterior_log_liks.len() as f64;
    Ok(EvidenceReport {
        log_evidence,
        avg_data_fit,
        info_gain: avg_data_fit - log_evidence,
        estimator,
    })
}

/// Index of the sample with the largest unnormalized log posterior.
pub fn map_index<T: BayesTarget + ?Sized>(target: &T, samples: &[Vec<f64>], log_liks: &[f64]) -> Option<usize> {
    samples
        .iter()
        .zip(log_liks)
        .map(|(x, l)| target.log_prior(x) + l)
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Chib-Jeliazkov evidence from a Metropolis-Hastings posterior sample.
///
/// The posterior ordinate at `theta_star` is estimated as
/// `mean_k[alpha(x_k -> theta*) q(x_k, theta*)] / mean_l[alpha(theta* -> y_l)]`
/// with `x_k` the posterior samples (with cached log-likelihoods) and `y_l`
/// `n_draws` fresh proposals from `N(theta*, cov)`.
pub fn log_evidence_chib_jeliazkov<T: BayesTarget + ?Sized, R: Rng + ?Sized>(
    target: &T,
    samples: &[Vec<f64>],
    log_liks: &[f64],
    theta_star: &[f64],
    cov: &DMatrix<f64>,
    n_draws: usize,
    rng: &mut R,
) -> Result<f64, SelectionError> {
    if samples.is_empty() {
        return Err(SelectionError::Empty("posterior samples"));
    }
    if samples.len() != log_liks.len() {
        return Err(SelectionError::LengthMismatch(samples.len(), log_liks.len()));
    }
    if n_draws == 0 {
        return Err(SelectionError::Empty("proposal draws"));
    }
    let star_prior = target.log_prior(theta_star);
    if !star_prior.is_finite() {
        return Err(SelectionError::OutsideSupport);
    }
    let star_lik = target.log_likelihood(theta_star);
    if !star_lik.is_finite() {
        return Err(SelectionError::OutsideSupport);
    }
    let kernel = ProposalKernel::new(cov.clone()).map_err(|_| SelectionError::IllConditioned)?;
    let star_post = star_prior + star_lik;

    let numerator_terms: Vec<f64> = samples
        .iter()
        .zip(log_liks)
        .map(|(x, &l)| {
            let post = target.log_prior(x) + l;
            let log_alpha = if post.is_finite() { (star_post - post).min(0.0) } else { 0.0 };
            log_alpha + kernel.log_density(x, theta_star)
        })
        .collect();
    let log_numerator = log_mean_exp(&numerator_terms);

    let mut alpha_sum = 0.0;
    for _ in 0..n_draws {
        let y = kernel.propose(theta_star, rng);
        let prior = target.log_prior(&y);
        if !prior.is_finite() {
            continue;
        }
        let post = prior + target.log_likelihood(&y);
        if post.is_finite() {
            alpha_sum += (post - star_post).min(0.0).exp();
        }
    }
    let denominator = alpha_sum / n_draws as f64;
    if !(denominator > 0.0) {
        return Err(SelectionError::ChibJeliazkovDenominator(denominator));
    }
    if !log_numerator.is_finite() {
        return Err(SelectionError::IllConditioned);
    }
    Ok(star_lik + star_prior - (log_numerator - denominator.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::tmcmc::{run, FnTarget, TmcmcConfig};

    #[test]
    fn flat_likelihood_evidence_and_zero_gain() {
        let target = FnTarget::uniform_box(vec![(0.0, 2.0)], |_: &[f64]| 3.25);
        let r = run(&target, &TmcmcConfig { n_samples: 100, ..TmcmcConfig::default() }).unwrap();
        let ev = log_evidence_stagewise(&r).unwrap();
        assert!((ev - 3.25).abs() < 1e-12);
        let rep = occam_decompose(r.posterior_log_liks(), ev).unwrap();
        assert!(rep.info_gain.abs() < 1e-12);
    }

    #[test]
    fn incomplete_runs_are_rejected() {
        let target = FnTarget::uniform_box(vec![(0.0, 2.0)], |x: &[f64]| -1e4 * x[0] * x[0]);
        let cfg = TmcmcConfig { n_samples: 100, max_stages: 1, ..TmcmcConfig::default() };
        let partial = match run(&target, &cfg) {
            Err(crate::error::TmcmcError::StageLimit { partial, .. }) => partial,
            other => panic!("{other:?}"),
        };
        assert!(matches!(log_evidence_stagewise(&partial), Err(SelectionError::IncompleteRun(_))));
    }

    #[test]
    fn occam_identity_holds_on_published_rows() {
        // (data fit, information gain, log evidence), all offset by the same constant.
        let rows: [(f64, f64, f64); 7] = [
            (98.41, 22.96, 75.45),
            (65.51, 11.30, 54.21),
            (58.30, 15.24, 43.05),
            (83.59, 6.32, 77.28),
            (74.82, 6.63, 68.19),
            (87.25, 12.74, 74.50),
            (86.94, 14.67, 72.27),
        ];
        for (fit, gain, ev) in rows {
            assert!((fit - gain - ev).abs() <= 0.02 + 1e-9, "{fit} - {gain} vs {ev}");
        }
    }

    #[test]
    fn decomposition_identity_is_exact() {
        let l = [-1610.2, -1598.7, -1601.1, -1603.3];
        let rep = occam_decompose(&l, -1612.9).unwrap();
        assert!((rep.avg_data_fit - rep.info_gain - rep.log_evidence).abs() < 1e-12);
        assert!(occam_decompose(&[], 0.0).is_err());
    }

    #[test]
    fn wider_prior_is_penalized() {
        let lik = |x: &[f64]| -0.5 * (x[0] / 0.5).powi(2);
        let cfg = TmcmcConfig { n_samples: 1000, seed: 4, ..TmcmcConfig::default() };
        let a = run(&FnTarget::uniform_box(vec![(-10.0, 10.0)], lik), &cfg).unwrap();
        let b = run(&FnTarget::uniform_box(vec![(-100.0, 100.0)], lik), &cfg).unwrap();
        let (ea, eb) = (log_evidence_stagewise(&a).unwrap(), log_evidence_stagewise(&b).unwrap());
        assert!(eb < ea, "{eb} >= {ea}");
        // Both peaks fit equally; the gap is the log prior-volume ratio.
        assert!((ea - eb - 10f64.ln()).abs() < 0.3, "gap {}", ea - eb);
    }

    fn conjugate_target() -> (FnTarget<impl Fn(&[f64]) -> f64 + Sync>, f64) {
        let data = [1.2, 0.4, 2.2, 1.7, 0.9];
        let ll = move |x: &[f64]| data.iter().map(|y| crate::filtering::log_normal_pdf(*y, x[0], 1.0)).sum::<f64>();
        (FnTarget::uniform_box(vec![(-50.0, 50.0)], ll), 1.28)
    }

    #[test]
    fn chib_jeliazkov_shifts_with_likelihood_constant() {
        let (target, ybar) = conjugate_target();
        let shifted = FnTarget::uniform_box(vec![(-50.0, 50.0)], |x: &[f64]| target.log_likelihood(x) + 12.5);
        let cfg = TmcmcConfig { n_samples: 500, seed: 2, ..TmcmcConfig::default() };
        let r = run(&target, &cfg).unwrap();
        let cov = r.final_proposal_cov().unwrap();
        let shifted_liks: Vec<f64> = r.posterior_log_liks().iter().map(|l| l + 12.5).collect();
        let a = log_evidence_chib_jeliazkov(&target, r.posterior_samples(), r.posterior_log_liks(), &[ybar], &cov, 500, &mut substream(1, 0, 0)).unwrap();
        let b = log_evidence_chib_jeliazkov(&shifted, r.posterior_samples(), &shifted_liks, &[ybar], &cov, 500, &mut substream(1, 0, 0)).unwrap();
        assert!((b - a - 12.5).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn chib_jeliazkov_guards() {
        let (target, _) = conjugate_target();
        let samples = vec![vec![1.0], vec![1.5]];
        let liks: Vec<f64> = samples.iter().map(|x| target.log_likelihood(x)).collect();
        let zero = DMatrix::zeros(1, 1);
        assert!(matches!(
            log_evidence_chib_jeliazkov(&target, &samples, &liks, &[1.0], &zero, 10, &mut substream(1, 0, 0)),
            Err(SelectionError::IllConditioned)
        ));
        let cov = DMatrix::from_element(1, 1, 0.1);
        assert!(matches!(
            log_evidence_chib_jeliazkov(&target, &samples, &liks, &[60.0], &cov, 10, &mut substream(1, 0, 0)),
            Err(SelectionError::OutsideSupport)
        ));
    }

    #[test]
    fn map_index_picks_highest_posterior() {
        let (target, _) = conjugate_target();
        let samples = vec![vec![-3.0], vec![1.3], vec![4.0]];
        let liks: Vec<f64> = samples.iter().map(|x| target.log_likelihood(x)).collect();
        assert_eq!(map_index(&target, &samples, &liks), Some(1));
    }
}
