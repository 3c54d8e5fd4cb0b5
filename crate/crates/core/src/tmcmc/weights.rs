/// Plausibility weights of one tempering transition.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityWeights {
    /// Weights normalized to sum to one.
    pub normalized: Vec<f64>,
    /// `ln mean_k exp(dp * log_lik_k)`, the stage's evidence increment.
    pub log_mean: f64,
}

/// Computes `exp(dp * log_lik)` with max-subtraction. Entries at `-inf`
/// receive weight exactly zero. When every entry is `-inf` the normalized
/// weights are all zero and the log-mean is `-inf`.
pub fn plausibility_weights(log_liks: &[f64], dp: f64) -> PlausibilityWeights {
    let max = log_liks
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .map(|l| dp * l)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return PlausibilityWeights {
            normalized: vec![0.0; log_liks.len()],
            log_mean: f64::NEG_INFINITY,
        };
    }
    let raw: Vec<f64> = log_liks
        .iter()
        .map(|&l| if l.is_finite() { (dp * l - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = raw.iter().sum();
    PlausibilityWeights {
        normalized: raw.iter().map(|w| w / sum).collect(),
        log_mean: max + (sum / log_liks.len() as f64).ln(),
    }
}

/// `ln mean exp(values)` with max-subtraction.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (sum / values.len() as f64).ln()
}
