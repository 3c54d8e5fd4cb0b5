use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use dyncal_core::experiments::{CalibrationOptions, TruthConfig};
use dyncal_core::ModelVariant;

/// Fully resolved settings of one command. Written to `config.json` in the
/// output directory; `dyncal rerun` replays it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Generate(GenerateConfig),
    Calibrate(CalibrateConfig),
    Compare(CompareConfig),
    Report(ReportConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub case: u8,
    pub truth: TruthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub model: ModelVariant,
    pub data: PathBuf,
    pub options: CalibrationOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Where a comparison's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Generate the case dataset in place (written under `data/`).
    Case { truth: TruthConfig },
    /// A dataset directory written by `generate`.
    Directory { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub case: Option<u8>,
    pub source: DataSource,
    pub models: Vec<ModelVariant>,
    /// Subset rows: label and excluded models.
    pub subsets: Vec<(String, Vec<String>)>,
    pub options: CalibrationOptions,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    /// Output directory of a `compare` run.
    pub run: PathBuf,
    pub format: Format,
    /// Constant added to log evidence and data fit in the printed table.
    pub offset: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            RunConfig::Generate(g) => {
                if !(1..=3).contains(&g.case) {
                    return Err(format!("unknown case {}; expected 1, 2 or 3", g.case));
                }
                g.truth.validate().map_err(|e| e.to_string())
            }
            RunConfig::Calibrate(c) => validate_options(&c.options),
            RunConfig::Compare(c) => {
                if let Some(case) = c.case {
                    if !(1..=3).contains(&case) {
                        return Err(format!("unknown case {case}; expected 1, 2 or 3"));
                    }
                }
                if let DataSource::Case { truth } = &c.source {
                    truth.validate().map_err(|e| e.to_string())?;
                }
                if c.models.len() < 2 {
                    return Err(format!("compare needs at least two models, got {}", c.models.len()));
                }
                validate_options(&c.options)
            }
            RunConfig::Report(r) => {
                if r.offset.is_finite() {
                    Ok(())
                } else {
                    Err("offset must be finite".into())
                }
            }
        }
    }
}

fn validate_options(o: &CalibrationOptions) -> Result<(), String> {
    o.tmcmc.validate().map_err(|e| e.to_string())?;
    if !(o.filter.grid_dt > 0.0) || !o.filter.grid_dt.is_finite() {
        return Err(format!("grid_dt must be positive, got {}", o.filter.grid_dt));
    }
    if o.cj_draws == Some(0) {
        return Err("cj draws must be positive".into());
    }
    Ok(())
}
