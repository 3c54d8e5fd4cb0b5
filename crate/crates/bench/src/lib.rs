//! Shared fixtures for the benchmarks.

use dyncal_core::experiments::{generate_dataset, TruthConfig};
use dyncal_core::{ModelId, ObservationSeries};

/// Observations of the given case at its default settings.
pub fn case_observations(case: u8, seed: u64) -> ObservationSeries {
    let cfg = TruthConfig::case(case).expect("valid case").with_seed(seed);
    generate_dataset(&cfg).expect("default case settings are valid").observations
}

/// A point near the posterior mode of each model on case 1 data.
pub fn typical_theta(id: ModelId) -> Vec<f64> {
    match id {
        ModelId::M1 => vec![70.0, 10.0, 10.0, 0.4, 50.0],
        ModelId::M2 => vec![75.0, 0.4, 120.0],
        ModelId::M3 => vec![75.0, 0.4, 120.0, 0.05],
        ModelId::M4a | ModelId::M4b => vec![0.4, 60.0],
        ModelId::M5 => vec![0.4, 50.0, 3.0],
        ModelId::M6 => vec![80.0, 0.4, 50.0, 3.0],
    }
}
