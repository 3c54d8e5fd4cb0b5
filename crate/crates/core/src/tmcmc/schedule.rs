use crate::error::TmcmcError;

/// Tolerance of the exponent bisection.
pub const EXPONENT_TOL: f64 = 1e-10;

/// Coefficient of variation (std / mean, `N - 1` denominator) of the
/// plausibility weights `exp(dp * log_lik)`. Entries at `-inf` contribute
/// zero weight. Returns NaN when no entry is finite.
pub fn weight_cov(log_liks: &[f64], dp: f64) -> f64 {
    let max = log_liks
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || log_liks.len() < 2 {
        return f64::NAN;
    }
    let n = log_liks.len() as f64;
    let weight = |l: f64| if l.is_finite() { (dp * (l - max)).exp() } else { 0.0 };
    let mean = log_liks.iter().map(|&l| weight(l)).sum::<f64>() / n;
    let var = log_liks
        .iter()
        .map(|&l| {
            let d = weight(l) - mean;
            d * d
        })
        .sum::<f64>()
        / (n - 1.0);
    var.sqrt() / mean
}

/// Next tempering exponent: the largest `p' <= 1` whose plausibility weights
/// have coefficient of variation at most `target_cov`, found by bisection on
/// `(p, 1]`.
pub fn next_exponent(log_liks: &[f64], p: f64, target_cov: f64) -> Result<f64, TmcmcError> {
    if !(0.0..1.0).contains(&p) {
        return Err(TmcmcError::InvalidConfig(format!("current exponent {p} outside [0, 1)")));
    }
    if !(target_cov > 0.0) {
        return Err(TmcmcError::InvalidConfig(format!("target CoV must be positive, got {target_cov}")));
    }
    if !log_liks.iter().any(|l| l.is_finite()) {
        return Err(TmcmcError::NoViableSamples { stage: 0 });
    }
    let max_dp = 1.0 - p;
    let cov_at = |dp: f64| weight_cov(log_liks, dp);
    if cov_at(max_dp) <= target_cov {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, max_dp);
    while hi - lo > EXPONENT_TOL {
        let mid = 0.5 * (lo + hi);
        if cov_at(mid) > target_cov {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // With many zero-likelihood samples even an infinitesimal step exceeds
    // the target; take the smallest bracketed step so the schedule advances.
    let dp = if lo > 0.0 { lo } else { hi };
    Ok((p + dp).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_log_liks_jump_to_one() {
        assert_eq!(next_exponent(&[-3.0; 10], 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(next_exponent(&[-3.0; 10], 0.7, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn two_point_exponent_matches_closed_form() {
        // Two weights {1, r}: CoV = sqrt(2) (r - 1) / (r + 1) = 1
        // gives r = (1 + 1/sqrt2) / (1 - 1/sqrt2), and r = 10^(6 dp).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = (1.0 + s) / (1.0 - s);
        let dp_exact = r.ln() / 1e6f64.ln();
        let log_liks = [0.0, 1e6f64.ln()];
        let p = next_exponent(&log_liks, 0.0, 1.0).unwrap();
        assert!((p - dp_exact).abs() < 1e-9, "{p} vs {dp_exact}");
        assert!((weight_cov(&log_liks, p) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn all_neg_infinity_is_an_error() {
        assert!(matches!(
            next_exponent(&[f64::NEG_INFINITY; 4], 0.0, 1.0),
            Err(TmcmcError::NoViableSamples { .. })
        ));
    }

    #[test]
    fn zero_likelihood_majority_still_advances() {
        let mut l = vec![f64::NEG_INFINITY; 80];
        l.extend(std::iter::repeat_n(-5.0, 20));
        let p = next_exponent(&l, 0.0, 1.0).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(next_exponent(&[0.0, 1.0], 1.0, 1.0).is_err());
        assert!(next_exponent(&[0.0, 1.0], 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn wider_spread_never_takes_a_larger_step(
            base in prop::collection::vec(-50.0f64..50.0, 2..40),
            scale in 1.0f64..20.0,
            p in 0.0f64..0.9,
        ) {
            let mean = base.iter().sum::<f64>() / base.len() as f64;
            let wide: Vec<f64> = base.iter().map(|l| mean + scale * (l - mean)).collect();
            let step = next_exponent(&base, p, 1.0).unwrap() - p;
            let wide_step = next_exponent(&wide, p, 1.0).unwrap() - p;
            prop_assert!(wide_step <= step + 1e-9, "{wide_step} > {step}");
        }

        #[test]
        fn achieved_cov_respects_target(
            l in prop::collection::vec(-500.0f64..0.0, 2..60),
            target in 0.2f64..3.0,
        ) {
            let p = next_exponent(&l, 0.0, target).unwrap();
            let c = weight_cov(&l, p);
            prop_assert!(p == 1.0 || c <= target + 1e-6, "cov {c} target {target}");
            prop_assert!(p > 0.0);
        }
    }
}
