//! Evidence estimators against a closed-form marginal likelihood, and
//! end-to-end calibrations on synthetic degradation records.

use dyncal_core::experiments::{calibrate, generate_dataset, CalibrationOptions, TruthConfig};
use dyncal_core::filtering::{log_normal_pdf, run_filter, ObservationSeries};
use dyncal_core::selection::log_evidence_stagewise;
use dyncal_core::tmcmc::{run, FnTarget};
use dyncal_core::{CandidateModel, ModelId, TmcmcConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

const BOX: (f64, f64) = (-50.0, 50.0);
const NOISE: f64 = 2.0;

fn gaussian_mean_data() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    (0..20).map(|_| 3.0 + NOISE * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `ln p(y)` for a Gaussian mean under a uniform prior on `BOX`.
fn analytic_log_evidence(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let s2 = NOISE * NOISE;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let scale = (s2 / n).sqrt();
    let mass = std_normal.cdf((BOX.1 - mean) / scale) - std_normal.cdf((BOX.0 - mean) / scale);
    -0.5 * n * (2.0 * std::f64::consts::PI * s2).ln() - ss / (2.0 * s2)
        + 0.5 * (2.0 * std::f64::consts::PI * s2 / n).ln()
        + mass.ln()
        - (BOX.1 - BOX.0).ln()
}

#[test]
fn analytic_evidence_matches_quadrature() {
    let y = gaussian_mean_data();
    let n = 200_000;
    let h = (BOX.1 - BOX.0) / n as f64;
    let logs: Vec<f64> = (0..n)
        .map(|i| {
            let mu = BOX.0 + (i as f64 + 0.5) * h;
            y.iter().map(|v| log_normal_pdf(*v, mu, NOISE * NOISE)).sum::<f64>()
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let integral = max + (logs.iter().map(|l| (l - max).exp()).sum::<f64>() * h).ln();
    let quadrature = integral - (BOX.1 - BOX.0).ln();
    assert!((quadrature - analytic_log_evidence(&y)).abs() < 1e-8);
}

#[test]
fn stagewise_evidence_recovers_the_conjugate_value() {
    let y = gaussian_mean_data();
    let exact = analytic_log_evidence(&y);
    let lik = move |x: &[f64]| y.iter().map(|v| log_normal_pdf(*v, x[0], NOISE * NOISE)).sum::<f64>();
    let target = FnTarget::uniform_box(vec![BOX], lik);
    let mut estimates: Vec<f64> = (1..=5)
        .map(|seed| {
            let cfg = TmcmcConfig {
                n_samples: 2000,
                seed,
                ..TmcmcConfig::default()
            };
            log_evidence_stagewise(&run(&target, &cfg).unwrap()).unwrap()
        })
        .collect();
    estimates.sort_by(f64::total_cmp);
    let median = estimates[estimates.len() / 2];
    assert!((median - exact).abs() < 0.15, "median {median} vs analytic {exact}");
}

fn case_data(case: u8, seed: u64) -> ObservationSeries {
    generate_dataset(&TruthConfig::case(case).unwrap().with_seed(seed)).unwrap().observations
}

fn options(seed: u64) -> CalibrationOptions {
    CalibrationOptions {
        tmcmc: TmcmcConfig {
            n_samples: 1000,
            seed,
            ..TmcmcConfig::default()
        },
        ..CalibrationOptions::default()
    }
}

#[test]
fn constant_stiffness_posterior_brackets_the_two_regimes() {
    let data = case_data(1, 21);
    let model = CandidateModel::new(ModelId::M2);
    let cal = calibrate(&model, &data, &options(21)).unwrap();
    let ks: Vec<f64> = cal.run.posterior_samples().iter().map(|s| s[0]).collect();
    let inside = ks.iter().filter(|k| (65.0..=85.0).contains(*k)).count() as f64 / ks.len() as f64;
    assert!(inside >= 0.95, "only {:.1}% of K in [65, 85]", 100.0 * inside);
    assert!(cal.report.info_gain >= -0.5, "info gain {}", cal.report.info_gain);
    assert!((cal.report.avg_data_fit - cal.report.info_gain - cal.report.log_evidence).abs() < 1e-9);
}

#[test]
fn tracked_stiffness_follows_a_large_drop() {
    let data = case_data(2, 22);
    let model = CandidateModel::new(ModelId::M5);
    let cal = calibrate(&model, &data, &options(22)).unwrap();
    let filtered = run_filter(&model, &cal.map.values(), &data, &Default::default()).unwrap();
    let k_end = filtered.final_belief().unwrap().mean()[2];
    assert!((5.0..=15.0).contains(&k_end), "terminal stiffness {k_end}");
    assert!(cal.report.info_gain >= -0.5, "info gain {}", cal.report.info_gain);
}
