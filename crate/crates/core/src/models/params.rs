use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Named static parameter values in a model's fixed coordinate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    entries: Vec<(String, f64)>,
}

impl ParamVector {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self, ModelError> {
        let entries: Vec<(String, f64)> = entries.into_iter().map(|(n, v)| (n.into(), v)).collect();
        let mut seen = HashSet::new();
        for (name, value) in &entries {
            if !seen.insert(name.as_str()) {
                return Err(ModelError::DuplicateParameter(name.clone()));
            }
            if !value.is_finite() {
                return Err(ModelError::NonFinite {
                    name: name.clone(),
                    value: *value,
                });
            }
        }
        Ok(ParamVector { entries })
    }

    /// Zips coordinate names with sampler values.
    pub fn from_values<S: AsRef<str>>(names: &[S], values: &[f64]) -> Result<Self, ModelError> {
        if names.len() != values.len() {
            return Err(ModelError::DimensionMismatch {
                what: "parameter vector",
                expected: names.len(),
                got: values.len(),
            });
        }
        ParamVector::new(names.iter().map(|n| n.as_ref().to_string()).zip(values.iter().copied()))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBound {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// Independent uniform priors, one per static parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    bounds: Vec<UniformBound>,
}

impl PriorSpec {
    pub fn new(bounds: Vec<UniformBound>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for b in &bounds {
            if !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
                return Err(ModelError::InvalidPrior {
                    name: b.name.clone(),
                    lo: b.lo,
                    hi: b.hi,
                });
            }
            if !seen.insert(b.name.clone()) {
                return Err(ModelError::DuplicateParameter(b.name.clone()));
            }
        }
        Ok(PriorSpec { bounds })
    }

    pub(crate) fn from_table(table: &[(&str, f64, f64)]) -> Self {
        PriorSpec::new(
            table
                .iter()
                .map(|&(name, lo, hi)| UniformBound {
                    name: name.to_string(),
                    lo,
                    hi,
                })
                .collect(),
        )
        .expect("built-in prior table is valid")
    }

    pub fn bounds(&self) -> &[UniformBound] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.bounds.iter().map(|b| b.name.clone()).collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.bounds.len()
            && self.bounds.iter().zip(theta).all(|(b, &x)| x >= b.lo && x <= b.hi)
    }

    /// `-sum(ln(hi - lo))` inside the box, `-inf` outside.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if self.contains(theta) {
            -self.log_volume()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn log_volume(&self) -> f64 {
        self.bounds.iter().map(|b| (b.hi - b.lo).ln()).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds.iter().map(|b| rng.random_range(b.lo..b.hi)).collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| 0.5 * (b.lo + b.hi)).collect()
    }
}

/// Log prior density of a named parameter vector; `-inf` outside the support
/// or when names do not line up with the prior coordinates.
pub fn log_prior(theta: &ParamVector, prior: &PriorSpec) -> f64 {
    if theta.len() != prior.dim() || !theta.names().zip(prior.bounds()).all(|(n, b)| n == b.name) {
        return f64::NEG_INFINITY;
    }
    prior.log_density(&theta.values())
}

pub fn sample_prior<R: Rng + ?Sized>(prior: &PriorSpec, rng: &mut R) -> ParamVector {
    let values = prior.sample(rng);
    ParamVector::from_values(&prior.names(), &values).expect("prior names are unique")
}
