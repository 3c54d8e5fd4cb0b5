//! Model evidence, its Occam decomposition, and posterior model
//! probabilities over a candidate set.

mod evidence;

use serde::{Deserialize, Serialize};

pub use evidence::{
    log_evidence_chib_jeliazkov, log_evidence_stagewise, map_index, occam_decompose, occam_decompose_with,
    EvidenceEstimator, EvidenceReport,
};

use crate::error::SelectionError;
use crate::io::ext;

/// Softmax of `log_evidence + ln prior`, computed with log-sum-exp.
pub fn model_probabilities(log_evidences: &[f64], model_priors: &[f64]) -> Result<Vec<f64>, SelectionError> {
    if log_evidences.len() != model_priors.len() {
        return Err(SelectionError::LengthMismatch(log_evidences.len(), model_priors.len()));
    }
    if log_evidences.is_empty() {
        return Err(SelectionError::Empty("log evidences"));
    }
    if model_priors.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || !model_priors.iter().any(|&p| p > 0.0) {
        return Err(SelectionError::InvalidModelPriors);
    }
    let scores: Vec<f64> = log_evidences
        .iter()
        .zip(model_priors)
        .map(|(&e, &p)| if p > 0.0 { e + p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(SelectionError::Empty("models with finite evidence"));
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Equal-prior probabilities.
pub fn uniform_model_probabilities(log_evidences: &[f64]) -> Result<Vec<f64>, SelectionError> {
    model_probabilities(log_evidences, &vec![1.0; log_evidences.len()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub model: String,
    pub report: EvidenceReport,
    pub probability: f64,
}

/// Probabilities recomputed after dropping some models from the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub label: String,
    pub excluded: Vec<String>,
    /// Aligned with the comparison entries; `None` for excluded models.
    #[serde(with = "ext::opt_reals")]
    pub probabilities: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub entries: Vec<ComparisonEntry>,
    #[serde(default)]
    pub subsets: Vec<SubsetRow>,
}

impl ModelComparison {
    /// Compares models under equal model priors.
    pub fn new(reports: Vec<(String, EvidenceReport)>) -> Result<Self, SelectionError> {
        let evidences: Vec<f64> = reports.iter().map(|(_, r)| r.log_evidence).collect();
        let probs = uniform_model_probabilities(&evidences)?;
        Ok(ModelComparison {
            entries: reports
                .into_iter()
                .zip(probs)
                .map(|((model, report), probability)| ComparisonEntry {
                    model,
                    report,
                    probability,
                })
                .collect(),
            subsets: Vec::new(),
        })
    }

    pub fn models(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.model.as_str()).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.probability).collect()
    }

    pub fn entry(&self, model: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.model == model)
    }

    pub fn probability(&self, model: &str) -> Option<f64> {
        self.entry(model).map(|e| e.probability)
    }

    /// Highest-probability model.
    pub fn best(&self) -> Option<&ComparisonEntry> {
        self.entries.iter().max_by(|a, b| a.probability.total_cmp(&b.probability))
    }

    /// Entries ordered by decreasing log evidence.
    pub fn ranked(&self) -> Vec<&ComparisonEntry> {
        let mut v: Vec<&ComparisonEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| b.report.log_evidence.total_cmp(&a.report.log_evidence));
        v
    }

    /// Probabilities with `excluded` models removed and the rest renormalized.
    pub fn subset_probabilities(&self, excluded: &[String]) -> Result<Vec<Option<f64>>, SelectionError> {
        let kept: Vec<usize> = (0..self.entries.len())
            .filter(|&i| !excluded.contains(&self.entries[i].model))
            .collect();
        let evidences: Vec<f64> = kept.iter().map(|&i| self.entries[i].report.log_evidence).collect();
        let probs = uniform_model_probabilities(&evidences)?;
        let mut out = vec![None; self.entries.len()];
        for (i, p) in kept.into_iter().zip(probs) {
            out[i] = Some(p);
        }
        Ok(out)
    }

    /// Appends a subset row; excluded names absent from the table are ignored.
    pub fn add_subset(&mut self, label: &str, excluded: &[String]) -> Result<&SubsetRow, SelectionError> {
        let probabilities = self.subset_probabilities(excluded)?;
        let excluded = excluded
            .iter()
            .filter(|m| self.entry(m).is_some())
            .cloned()
            .collect();
        self.subsets.push(SubsetRow {
            label: label.to_string(),
            excluded,
            probabilities,
        });
        Ok(self.subsets.last().expect("just pushed"))
    }

    /// A new comparison over the remaining models only.
    pub fn without(&self, excluded: &[String]) -> Result<ModelComparison, SelectionError> {
        ModelComparison::new(
            self.entries
                .iter()
                .filter(|e| !excluded.contains(&e.model))
                .map(|e| (e.model.clone(), e.report))
                .collect(),
        )
    }
}
