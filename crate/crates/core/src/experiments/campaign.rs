use serde::{Deserialize, Serialize};

use super::{generate_dataset, DatasetSummary, SyntheticDataset, TruthConfig};
use crate::error::{Error, Result};
use crate::filtering::{self, BandRow, FilterSettings, ObservationSeries};
use crate::io::ext;
use crate::models::{CandidateModel, ModelId, ModelVariant, ParamVector};
use crate::rng::{substream, SampleRng};
use crate::selection::{
    log_evidence_chib_jeliazkov, log_evidence_stagewise, map_index, occam_decompose, EvidenceReport,
    ModelComparison,
};
use crate::tmcmc::{self, BayesTarget, StageSummary, TmcmcConfig, TmcmcRun};

/// Posterior target of one candidate model given a dataset.
pub struct CalibrationTarget<'a> {
    pub model: &'a CandidateModel,
    pub data: &'a ObservationSeries,
    pub settings: FilterSettings,
}

impl BayesTarget for CalibrationTarget<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.model.prior().log_density(theta)
    }
    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        filtering::log_likelihood(self.model, theta, self.data, &self.settings)
    }
    fn sample_prior(&self, rng: &mut SampleRng) -> Vec<f64> {
        self.model.prior().sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    pub tmcmc: TmcmcConfig,
    pub filter: FilterSettings,
    /// Proposal draws for the Chib-Jeliazkov cross-check; `None` skips it.
    pub cj_draws: Option<usize>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tmcmc: TmcmcConfig::default(),
            filter: FilterSettings::default(),
            cj_draws: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub model: CandidateModel,
    pub run: TmcmcRun,
    pub report: EvidenceReport,
    pub chib_jeliazkov: Option<f64>,
    /// Highest-posterior sample.
    pub map: ParamVector,
}

/// Samples the posterior of `model` and reports its evidence.
pub fn calibrate(model: &CandidateModel, data: &ObservationSeries, opts: &CalibrationOptions) -> Result<Calibration> {
    let target = CalibrationTarget {
        model,
        data,
        settings: opts.filter,
    };
    let run = tmcmc::run(&target, &opts.tmcmc)?;
    let log_evidence = log_evidence_stagewise(&run)?;
    let report = occam_decompose(run.posterior_log_liks(), log_evidence)?;
    let idx = map_index(&target, run.posterior_samples(), run.posterior_log_liks())
        .ok_or(crate::error::SelectionError::Empty("posterior samples"))?;
    let theta_star = run.posterior_samples()[idx].clone();
    let chib_jeliazkov = match opts.cj_draws {
        None => None,
        Some(n_draws) => {
            let cov = run
                .final_proposal_cov()
                .ok_or(crate::error::SelectionError::IllConditioned)?;
            let mut rng = substream(opts.tmcmc.seed, crate::rng::SEQUENTIAL, crate::rng::SEQUENTIAL);
            Some(log_evidence_chib_jeliazkov(
                &target,
                run.posterior_samples(),
                run.posterior_log_liks(),
                &theta_star,
                &cov,
                n_draws,
                &mut rng,
            )?)
        }
    };
    let map = ParamVector::from_values(&model.param_names(), &theta_star)?;
    Ok(Calibration {
        model: model.clone(),
        run,
        report,
        chib_jeliazkov,
        map,
    })
}

impl Calibration {
    /// State slot plotted for this model: the stiffness where it is a state,
    /// the displacement otherwise.
    pub fn trajectory_slot(&self) -> &'static str {
        if self.model.layout().slot_index("K").is_some() {
            "K"
        } else {
            "u"
        }
    }

    /// Filter band at the MAP parameters.
    pub fn trajectory(&self, data: &ObservationSeries, settings: &FilterSettings) -> Result<Vec<BandRow>> {
        Ok(filtering::trajectory_at(&self.map, &self.model, data, settings, self.trajectory_slot())?)
    }

    pub fn summary(&self, label: &str, data: &ObservationSeries, settings: &FilterSettings) -> Result<LegSummary> {
        Ok(LegSummary {
            model: label.to_string(),
            param_names: self.model.param_names(),
            posterior: self.run.posterior_samples().to_vec(),
            posterior_log_liks: self.run.posterior_log_liks().to_vec(),
            stages: self.run.summary(),
            report: self.report,
            chib_jeliazkov: self.chib_jeliazkov,
            map: self.map.values(),
            trajectory_slot: self.trajectory_slot().to_string(),
            trajectory: self.trajectory(data, settings)?,
        })
    }
}

/// Serializable outcome of one calibrated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegSummary {
    pub model: String,
    pub param_names: Vec<String>,
    pub posterior: Vec<Vec<f64>>,
    #[serde(with = "ext::reals")]
    pub posterior_log_liks: Vec<f64>,
    pub stages: Vec<StageSummary>,
    pub report: EvidenceReport,
    #[serde(default, with = "ext::opt_real")]
    pub chib_jeliazkov: Option<f64>,
    pub map: Vec<f64>,
    pub trajectory_slot: String,
    pub trajectory: Vec<BandRow>,
}

impl LegSummary {
    /// Posterior draws of one parameter.
    pub fn marginal(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.param_names.iter().position(|n| n == name)?;
        Some(self.posterior.iter().map(|x| x[i]).collect())
    }

    pub fn marginals(&self) -> Vec<MarginalSummary> {
        self.param_names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let v: Vec<f64> = self.posterior.iter().map(|x| x[i]).collect();
                MarginalSummary::new(name, &v)
            })
            .collect()
    }
}

/// Moments and central 99% interval of one posterior marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSummary {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub q005: f64,
    pub q995: f64,
}

impl MarginalSummary {
    pub fn new(name: &str, values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        MarginalSummary {
            name: name.to_string(),
            mean,
            std: var.sqrt(),
            q005: quantile(&sorted, 0.005),
            q995: quantile(&sorted, 0.995),
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.q005 <= value && value <= self.q995
    }
}

/// Linearly interpolated quantile of ascending `sorted` values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LegOutcome {
    Completed(Box<LegSummary>),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegResult {
    pub model: String,
    pub outcome: LegOutcome,
}

impl LegResult {
    pub fn summary(&self) -> Option<&LegSummary> {
        match &self.outcome {
            LegOutcome::Completed(s) => Some(s),
            LegOutcome::Failed { .. } => None,
        }
    }
}

/// What is known about the dataset a campaign runs on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignContext {
    pub case: Option<u8>,
    pub truth: Option<TruthConfig>,
    pub dataset: Option<DatasetSummary>,
}

impl CampaignContext {
    pub fn of(case: Option<u8>, dataset: &SyntheticDataset) -> Self {
        CampaignContext {
            case,
            truth: Some(dataset.config),
            dataset: Some(dataset.summary()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub context: CampaignContext,
    pub options: CalibrationOptions,
    pub legs: Vec<LegResult>,
    /// Absent when fewer than one leg completed.
    pub comparison: Option<ModelComparison>,
}

impl CampaignResult {
    pub fn leg(&self, model: &str) -> Option<&LegSummary> {
        self.legs.iter().find(|l| l.model == model).and_then(LegResult::summary)
    }

    pub fn failures(&self) -> Vec<(&str, &str)> {
        self.legs
            .iter()
            .filter_map(|l| match &l.outcome {
                LegOutcome::Failed { error } => Some((l.model.as_str(), error.as_str())),
                LegOutcome::Completed(_) => None,
            })
            .collect()
    }
}

/// Per-model sampler seed: the base seed mixed with the model label, so a
/// leg's result does not depend on which other models are in the campaign.
pub(crate) fn leg_seed(base: u64, label: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    base ^ h
}

/// Subset rows reported for each case: `*` drops M1 and `**` additionally
/// drops the augmented models given the correct initial stiffness (case 2);
/// case 3's `*` drops only the latter.
pub fn standard_subsets(case: u8) -> Vec<(String, Vec<String>)> {
    let nominal: Vec<String> = [ModelId::M4a, ModelId::M4b, ModelId::M5].iter().map(|m| m.to_string()).collect();
    let m1 = ModelId::M1.to_string();
    match case {
        2 => vec![
            ("*".into(), vec![m1.clone()]),
            ("**".into(), std::iter::once(m1).chain(nominal).collect()),
        ],
        3 => vec![("*".into(), nominal)],
        _ => Vec::new(),
    }
}

/// Calibrates every variant on the dataset and compares the survivors.
/// Failed legs are recorded and excluded from the comparison.
pub fn run_campaign(
    data: &ObservationSeries,
    context: CampaignContext,
    variants: &[ModelVariant],
    opts: &CalibrationOptions,
    subsets: &[(String, Vec<String>)],
    progress: &(dyn Fn(&str) + Sync),
) -> Result<CampaignResult> {
    if variants.is_empty() {
        return Err(Error::Config("no models to calibrate".into()));
    }
    let mut labels: Vec<String> = variants.iter().map(ModelVariant::label).collect();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate model variants".into()));
    }
    let mut legs = Vec::with_capacity(variants.len());
    for variant in variants {
        let label = variant.label();
        progress(&format!("calibrating {label}"));
        let mut leg_opts = *opts;
        leg_opts.tmcmc.seed = leg_seed(opts.tmcmc.seed, &label);
        let outcome = variant
            .build()
            .map_err(Error::from)
            .and_then(|model| calibrate(&model, data, &leg_opts))
            .and_then(|cal| cal.summary(&label, data, &opts.filter));
        let outcome = match outcome {
            Ok(summary) => {
                progress(&format!(
                    "{label}: log evidence {:.3}, {} stages",
                    summary.report.log_evidence,
                    summary.stages.len() - 1
                ));
                LegOutcome::Completed(Box::new(summary))
            }
            Err(e) => {
                progress(&format!("{label}: failed: {e}"));
                LegOutcome::Failed { error: e.to_string() }
            }
        };
        legs.push(LegResult { model: label, outcome });
    }
    let reports: Vec<(String, EvidenceReport)> = legs
        .iter()
        .filter_map(|l| l.summary().map(|s| (l.model.clone(), s.report)))
        .collect();
    let comparison = if reports.is_empty() {
        None
    } else {
        let mut cmp = ModelComparison::new(reports)?;
        for (label, excluded) in subsets {
            let remaining = cmp.models().iter().filter(|m| !excluded.iter().any(|e| e == *m)).count();
            if remaining > 0 {
                cmp.add_subset(label, excluded)?;
            }
        }
        Some(cmp)
    };
    Ok(CampaignResult {
        context,
        options: *opts,
        legs,
        comparison,
    })
}

/// Generates the case dataset from `seed` and runs the campaign with the
/// case's standard subset rows.
pub fn run_case(
    case: u8,
    seed: u64,
    variants: &[ModelVariant],
    opts: &CalibrationOptions,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<(SyntheticDataset, CampaignResult)> {
    let dataset = generate_dataset(&TruthConfig::case(case)?.with_seed(seed))?;
    let context = CampaignContext::of(Some(case), &dataset);
    let result = run_campaign(
        &dataset.observations,
        context,
        variants,
        opts,
        &standard_subsets(case),
        progress,
    )?;
    Ok((dataset, result))
}
