//! Calibration of stochastic dynamical systems with time-varying and
//! time-invariant parameters.
//!
//! Time-varying quantities (here the stiffness of a single-degree-of-freedom
//! oscillator) are tracked by an extended Kalman filter over an augmented
//! state, while the static parameters are sampled with transitional MCMC
//! using the filter's marginal likelihood. Candidate models are then ranked
//! by their Bayesian evidence.
//!
//! The crate is organised bottom-up:
//!
//! * [`models`]: the candidate state-space models and the data-generating
//!   oscillator, with analytic Jacobians and uniform priors.
//! * [`filtering`]: forecast/analysis steps, the grid-driven filter and
//!   its likelihood.
//! * [`tmcmc`]: the tempered sampler.
//! * [`selection`]: evidence estimators, the Occam decomposition and model
//!   probabilities.
//! * [`experiments`]: synthetic datasets and calibration campaigns.
//! * [`io`]: CSV/JSON artifact formats.

pub mod error;
pub mod experiments;
pub mod filtering;
pub mod io;
pub mod models;
pub mod rng;
pub mod selection;
pub mod tmcmc;

pub use error::{Error, Result};
pub use filtering::{FilterResult, FilterSettings, GaussianBelief, ObservationSeries};
pub use models::{CandidateModel, ModelId, ModelVariant, ParamVector, PriorSpec, StiffnessSchedule};
pub use selection::{EvidenceReport, ModelComparison};
pub use tmcmc::{TmcmcConfig, TmcmcRun};
