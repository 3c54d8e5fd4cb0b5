use thiserror::Error;

use crate::tmcmc::TmcmcRun;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unknown model id `{0}`")]
    UnknownModel(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),
    #[error("parameter `{name}` is not finite ({value})")]
    NonFinite { name: String, value: f64 },
    #[error("prior bound for `{name}` requires lo < hi, got [{lo}, {hi}]")]
    InvalidPrior { name: String, lo: f64, hi: f64 },
    #[error("model {0} has no fixed initial stiffness to override")]
    NoInitialStiffness(String),
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
}

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("filter diverged at grid index {grid_index} (t = {t})")]
    Diverged { grid_index: usize, t: f64 },
    #[error("innovation variance {variance} is not positive at grid index {grid_index}")]
    InnovationVariance { grid_index: usize, variance: f64 },
    #[error("observation time {t} is not on the filter grid (start {start}, dt {dt})")]
    OffGrid { t: f64, start: f64, dt: f64 },
    #[error("invalid observations: {0}")]
    InvalidObservations(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown state slot `{0}`")]
    UnknownSlot(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum TmcmcError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("stage {stage}: every sample has zero likelihood")]
    NoViableSamples { stage: usize },
    #[error("degenerate proposal covariance: {0}")]
    DegenerateCovariance(String),
    #[error("reached {max_stages} stages before the exponent reached 1 (p = {p})")]
    StageLimit {
        max_stages: usize,
        p: f64,
        partial: Box<TmcmcRun>,
    },
}

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("run is incomplete: final exponent {0} != 1")]
    IncompleteRun(f64),
    #[error("Chib-Jeliazkov denominator is {0}; increase the number of proposal draws")]
    ChibJeliazkovDenominator(f64),
    #[error("proposal covariance is ill-conditioned for the Chib-Jeliazkov estimator")]
    IllConditioned,
    #[error("reference point lies outside the prior support")]
    OutsideSupport,
    #[error("length mismatch: {0} evidences vs {1} priors")]
    LengthMismatch(usize, usize),
    #[error("model priors must be nonnegative and not all zero")]
    InvalidModelPriors,
    #[error("empty input: {0}")]
    Empty(&'static str),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Tmcmc(#[from] TmcmcError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}
