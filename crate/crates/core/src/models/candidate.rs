use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dynamics, NoiseMat, NoiseVec, ParamVector, PriorSpec, StateMat, StateVec, StiffnessSchedule};
use crate::error::ModelError;
use crate::filtering::GaussianBelief;

/// Mass of the oscillator (kg). Known, never estimated.
pub const MASS: f64 = 1.0;

/// Nominal initial stiffness mean (N/mm) for the augmented-state models.
pub const DEFAULT_INITIAL_STIFFNESS: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4a,
    M4b,
    M5,
    M6,
}

impl ModelId {
    pub const ALL: [ModelId; 7] = [
        ModelId::M1,
        ModelId::M2,
        ModelId::M3,
        ModelId::M4a,
        ModelId::M4b,
        ModelId::M5,
        ModelId::M6,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelId::M1 => "M1",
            ModelId::M2 => "M2",
            ModelId::M3 => "M3",
            ModelId::M4a => "M4a",
            ModelId::M4b => "M4b",
            ModelId::M5 => "M5",
            ModelId::M6 => "M6",
        }
    }

    /// Whether stiffness is carried in the filter state.
    pub fn augments_stiffness(&self) -> bool {
        matches!(self, ModelId::M4a | ModelId::M4b | ModelId::M5 | ModelId::M6)
    }

    /// Whether the initial stiffness mean is a fixed setting (and so may be
    /// overridden by a variant).
    pub fn has_fixed_initial_stiffness(&self) -> bool {
        matches!(self, ModelId::M4a | ModelId::M4b | ModelId::M5)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    pub n_state: usize,
    pub n_noise: usize,
    pub slots: Vec<String>,
}

impl StateLayout {
    fn new(n_noise: usize, slots: &[&str]) -> Self {
        StateLayout {
            n_state: slots.len(),
            n_noise,
            slots: slots.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FixedSettings {
    pub gamma: Option<f64>,
    pub initial_stiffness: Option<f64>,
}

/// Spread of the initial filter belief. The displacement variance is always
/// the sensor variance since its mean is taken from the first observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialBeliefConfig {
    /// Standard deviation of the initial velocity (mm/s).
    pub velocity_std: f64,
    /// Standard deviation of the initial stiffness (N/mm), augmented models only.
    pub stiffness_std: f64,
}

impl Default for InitialBeliefConfig {
    fn default() -> Self {
        InitialBeliefConfig {
            velocity_std: 50.0,
            stiffness_std: 25.0,
        }
    }
}

/// One of the candidate models, with its prior and fixed settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateModel {
    id: ModelId,
    layout: StateLayout,
    prior: PriorSpec,
    fixed: FixedSettings,
    initial: InitialBeliefConfig,
}

impl CandidateModel {
    pub fn new(id: ModelId) -> Self {
        let (slots, n_noise): (&[&str], usize) = match id {
            ModelId::M1 | ModelId::M2 => (&["u", "v"], 1),
            ModelId::M3 => (&["u", "v", "f"], 1),
            _ => (&["u", "v", "K"], 2),
        };
        let prior = PriorSpec::from_table(match id {
            ModelId::M1 => &[
                ("k1", 0.0, 1000.0),
                ("k2", 0.0, 1000.0),
                ("t_s", 0.0, 20.0),
                ("c", 0.0, 5.0),
                ("sigma", 0.0, 1000.0),
            ],
            ModelId::M2 => &[("K", 0.0, 1000.0), ("c", 0.0, 5.0), ("sigma", 0.0, 1000.0)],
            ModelId::M3 => &[
                ("K", 0.0, 1000.0),
                ("c", 0.0, 5.0),
                ("sigma", 0.0, 1000.0),
                ("tau", 0.0, 10.0),
            ],
            ModelId::M4a | ModelId::M4b => &[("c", 0.0, 5.0), ("sigma", 0.0, 1000.0)],
            ModelId::M5 => &[("c", 0.0, 5.0), ("sigma", 0.0, 1000.0), ("gamma", 0.0, 1000.0)],
            ModelId::M6 => &[
                ("K0", 0.0, 100.0),
                ("c", 0.0, 5.0),
                ("sigma", 0.0, 1000.0),
                ("gamma", 0.0, 1000.0),
            ],
        });
        let fixed = FixedSettings {
            gamma: match id {
                ModelId::M4a => Some(1.0),
                ModelId::M4b => Some(10.0),
                _ => None,
            },
            initial_stiffness: id.has_fixed_initial_stiffness().then_some(DEFAULT_INITIAL_STIFFNESS),
        };
        CandidateModel {
            id,
            layout: StateLayout::new(n_noise, slots),
            prior,
            fixed,
            initial: InitialBeliefConfig::default(),
        }
    }

    /// Overrides the fixed initial stiffness mean (M4a, M4b, M5 only).
    pub fn with_initial_stiffness(mut self, k0: f64) -> Result<Self, ModelError> {
        if !self.id.has_fixed_initial_stiffness() {
            return Err(ModelError::NoInitialStiffness(self.id.to_string()));
        }
        if !k0.is_finite() {
            return Err(ModelError::InvalidSetting(format!("initial stiffness {k0}")));
        }
        self.fixed.initial_stiffness = Some(k0);
        Ok(self)
    }

    pub fn with_initial_belief(mut self, initial: InitialBeliefConfig) -> Self {
        self.initial = initial;
        self
    }

    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn fixed(&self) -> &FixedSettings {
        &self.fixed
    }

    pub fn initial_config(&self) -> &InitialBeliefConfig {
        &self.initial
    }

    pub fn param_names(&self) -> Vec<String> {
        self.prior.names()
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    /// Resolves sampler coordinates into a concrete dynamics instance.
    pub fn bind(&self, theta: &[f64]) -> Result<BoundModel, ModelError> {
        if theta.len() != self.prior.dim() {
            return Err(ModelError::DimensionMismatch {
                what: "parameter vector",
                expected: self.prior.dim(),
                got: theta.len(),
            });
        }
        let fixed_k0 = || self.fixed.initial_stiffness.unwrap_or(DEFAULT_INITIAL_STIFFNESS);
        let model = match self.id {
            ModelId::M1 => BoundModel::oscillator(
                StiffnessSchedule::step(theta[0], theta[1], theta[2]),
                theta[3],
                theta[4],
            ),
            ModelId::M2 => BoundModel::oscillator(StiffnessSchedule::Constant { k: theta[0] }, theta[1], theta[2]),
            ModelId::M3 => BoundModel {
                structure: Structure::ColoredForcing {
                    k: theta[0],
                    tau: theta[3],
                },
                c: theta[1],
                sigma: theta[2],
                mass: MASS,
            },
            ModelId::M4a | ModelId::M4b => BoundModel::augmented(
                fixed_k0(),
                self.fixed.gamma.expect("M4 variants fix gamma"),
                theta[0],
                theta[1],
            ),
            ModelId::M5 => BoundModel::augmented(fixed_k0(), theta[2], theta[0], theta[1]),
            ModelId::M6 => BoundModel::augmented(theta[0], theta[3], theta[1], theta[2]),
        };
        Ok(model)
    }

    /// Binds a named parameter vector; names must match the prior order.
    pub fn bind_params(&self, theta: &ParamVector) -> Result<BoundModel, ModelError> {
        let names = self.param_names();
        if theta.len() != names.len() {
            return Err(ModelError::DimensionMismatch {
                what: "parameter vector",
                expected: names.len(),
                got: theta.len(),
            });
        }
        for (got, want) in theta.names().zip(&names) {
            if got != want {
                return Err(ModelError::UnknownParameter(got.to_string()));
            }
        }
        self.bind(&theta.values())
    }

    fn state_from_slice(&self, x: &[f64]) -> Result<StateVec, ModelError> {
        let n = self.layout.n_state;
        if x.len() != n {
            return Err(ModelError::DimensionMismatch {
                what: "state vector",
                expected: n,
                got: x.len(),
            });
        }
        let mut s = StateVec::zeros();
        s.as_mut_slice()[..n].copy_from_slice(x);
        Ok(s)
    }

    fn noise_from_slice(&self, xi: &[f64]) -> Result<NoiseVec, ModelError> {
        let n = self.layout.n_noise;
        if xi.len() != n {
            return Err(ModelError::DimensionMismatch {
                what: "noise vector",
                expected: n,
                got: xi.len(),
            });
        }
        let mut s = NoiseVec::zeros();
        s.as_mut_slice()[..n].copy_from_slice(xi);
        Ok(s)
    }

    fn check_dt(dt: f64) -> Result<(), ModelError> {
        if dt > 0.0 && dt.is_finite() {
            Ok(())
        } else {
            Err(ModelError::InvalidSetting(format!("time step must be positive, got {dt}")))
        }
    }

    /// One Euler-Maruyama step from time `t`.
    pub fn step_state(
        &self,
        x: &[f64],
        theta: &ParamVector,
        t: f64,
        dt: f64,
        xi: &[f64],
    ) -> Result<Vec<f64>, ModelError> {
        Self::check_dt(dt)?;
        let bound = self.bind_params(theta)?;
        let next = bound.step(&self.state_from_slice(x)?, t, dt, &self.noise_from_slice(xi)?);
        Ok(next.as_slice()[..self.layout.n_state].to_vec())
    }

    pub fn jacobian_state(&self, x: &[f64], theta: &ParamVector, t: f64, dt: f64) -> Result<DMatrix<f64>, ModelError> {
        Self::check_dt(dt)?;
        let bound = self.bind_params(theta)?;
        let a = bound.jacobian_state(&self.state_from_slice(x)?, t, dt);
        let n = self.layout.n_state;
        Ok(DMatrix::from_fn(n, n, |i, j| a[(i, j)]))
    }

    pub fn jacobian_noise(&self, x: &[f64], theta: &ParamVector, t: f64, dt: f64) -> Result<DMatrix<f64>, ModelError> {
        Self::check_dt(dt)?;
        let bound = self.bind_params(theta)?;
        let b = bound.jacobian_noise(&self.state_from_slice(x)?, t, dt);
        let (n, q) = (self.layout.n_state, self.layout.n_noise);
        Ok(DMatrix::from_fn(n, q, |i, j| b[(i, j)]))
    }

    /// Measurement Jacobians `(C, D)` of `d = u + eps`.
    pub fn jacobian_meas(&self) -> (DMatrix<f64>, f64) {
        let n = self.layout.n_state;
        (DMatrix::from_fn(1, n, |_, j| if j == 0 { 1.0 } else { 0.0 }), 1.0)
    }

    /// Initial filter belief given the parameters and the first observation.
    pub fn initial_belief(&self, theta: &[f64], first_obs: f64, noise_std: f64) -> Result<GaussianBelief, ModelError> {
        Ok(self.bind(theta)?.initial_belief(first_obs, noise_std, &self.initial))
    }
}

/// A model name plus an optional override of the fixed initial stiffness,
/// written `M5` or `M5@60`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub id: ModelId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_stiffness: Option<f64>,
}

impl ModelVariant {
    pub fn new(id: ModelId) -> Self {
        ModelVariant {
            id,
            initial_stiffness: None,
        }
    }

    pub fn with_initial_stiffness(id: ModelId, k0: f64) -> Self {
        ModelVariant {
            id,
            initial_stiffness: Some(k0),
        }
    }

    pub fn build(&self) -> Result<CandidateModel, ModelError> {
        let model = CandidateModel::new(self.id);
        match self.initial_stiffness {
            Some(k0) => model.with_initial_stiffness(k0),
            None => Ok(model),
        }
    }

    /// True when the variant uses the nominal (correct) initial stiffness.
    pub fn is_nominal_initial_stiffness(&self) -> bool {
        self.id.has_fixed_initial_stiffness()
            && self.initial_stiffness.is_none_or(|k| k == DEFAULT_INITIAL_STIFFNESS)
    }

    pub fn label(&self) -> String {
        self.to_string()
    }

    /// The candidate set of the comparison tables: every model, plus the
    /// erroneous-initial-stiffness variants of M4a, M4b and M5.
    pub fn full_set(erroneous_k0: f64) -> Vec<ModelVariant> {
        use ModelId::*;
        vec![
            ModelVariant::new(M1),
            ModelVariant::new(M2),
            ModelVariant::new(M3),
            ModelVariant::new(M4a),
            ModelVariant::with_initial_stiffness(M4a, erroneous_k0),
            ModelVariant::new(M4b),
            ModelVariant::with_initial_stiffness(M4b, erroneous_k0),
            ModelVariant::new(M5),
            ModelVariant::with_initial_stiffness(M5, erroneous_k0),
            ModelVariant::new(M6),
        ]
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.initial_stiffness {
            Some(k0) if k0 != DEFAULT_INITIAL_STIFFNESS => write!(f, "{}@{}", self.id, k0),
            _ => write!(f, "{}", self.id),
        }
    }
}

impl FromStr for ModelVariant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('@') {
            None => Ok(ModelVariant::new(s.trim().parse()?)),
            Some((id, k0)) => {
                let id: ModelId = id.trim().parse()?;
                let k0: f64 = k0
                    .trim()
                    .parse()
                    .map_err(|_| ModelError::InvalidSetting(format!("bad initial stiffness in `{s}`")))?;
                if !id.has_fixed_initial_stiffness() {
                    return Err(ModelError::NoInitialStiffness(id.to_string()));
                }
                Ok(ModelVariant::with_initial_stiffness(id, k0))
            }
        }
    }
}

/// How stiffness and forcing enter a bound model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    /// Two-state oscillator with deterministic stiffness `K(t)` and white
    /// forcing. Covers M1, M2 and the truth dynamics.
    Oscillator { schedule: StiffnessSchedule },
    /// Constant stiffness with Ornstein-Uhlenbeck forcing in the third slot (M3).
    ColoredForcing { k: f64, tau: f64 },
    /// Stiffness as a random-walk third state (M4-M6).
    Augmented { k0: f64, gamma: f64 },
}

/// A model with all parameters resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundModel {
    pub structure: Structure,
    pub c: f64,
    pub sigma: f64,
    pub mass: f64,
}

// Shared by every structure so that M4-M6 with a frozen stiffness state
// reproduce M2 bit for bit.
#[inline(always)]
fn velocity_drift(x1: f64, x2: f64, k: f64, c: f64, m: f64, dt: f64) -> f64 {
    (-dt * k / m) * x1 + (1.0 - dt * c / m) * x2
}

impl BoundModel {
    pub fn oscillator(schedule: StiffnessSchedule, c: f64, sigma: f64) -> Self {
        BoundModel {
            structure: Structure::Oscillator { schedule },
            c,
            sigma,
            mass: MASS,
        }
    }

    pub fn augmented(k0: f64, gamma: f64, c: f64, sigma: f64) -> Self {
        BoundModel {
            structure: Structure::Augmented { k0, gamma },
            c,
            sigma,
            mass: MASS,
        }
    }

    pub fn initial_belief(&self, first_obs: f64, noise_std: f64, cfg: &InitialBeliefConfig) -> GaussianBelief {
        let mut mean = StateVec::zeros();
        let mut cov = StateMat::zeros();
        mean[0] = first_obs;
        cov[(0, 0)] = noise_std * noise_std;
        cov[(1, 1)] = cfg.velocity_std * cfg.velocity_std;
        match self.structure {
            Structure::Oscillator { .. } => {}
            Structure::ColoredForcing { tau, .. } => {
                // Stationary variance of the forcing process.
                cov[(2, 2)] = 0.5 * self.sigma * self.sigma * tau;
            }
            Structure::Augmented { k0, .. } => {
                mean[2] = k0;
                cov[(2, 2)] = cfg.stiffness_std * cfg.stiffness_std;
            }
        }
        GaussianBelief::from_parts(self.n_state(), mean, cov)
    }
}

impl Dynamics for BoundModel {
    fn n_state(&self) -> usize {
        match self.structure {
            Structure::Oscillator { .. } => 2,
            _ => 3,
        }
    }

    fn n_noise(&self) -> usize {
        match self.structure {
            Structure::Augmented { .. } => 2,
            _ => 1,
        }
    }

    #[inline]
    fn step(&self, x: &StateVec, t: f64, dt: f64, xi: &NoiseVec) -> StateVec {
        let (m, c) = (self.mass, self.c);
        let sdt = dt.sqrt();
        match self.structure {
            Structure::Oscillator { schedule } => {
                let k = schedule.eval(t);
                StateVec::new(
                    x[0] + dt * x[1],
                    velocity_drift(x[0], x[1], k, c, m, dt) + sdt * self.sigma * xi[0],
                    0.0,
                )
            }
            Structure::ColoredForcing { k, tau } => StateVec::new(
                x[0] + dt * x[1],
                velocity_drift(x[0], x[1], k, c, m, dt) + (dt / m) * x[2],
                (1.0 - dt / tau) * x[2] + sdt * self.sigma * xi[0],
            ),
            Structure::Augmented { gamma, .. } => StateVec::new(
                x[0] + dt * x[1],
                velocity_drift(x[0], x[1], x[2], c, m, dt) + sdt * self.sigma * xi[0] / m,
                x[2] + sdt * gamma * xi[1],
            ),
        }
    }

    #[inline]
    fn jacobian_state(&self, x: &StateVec, t: f64, dt: f64) -> StateMat {
        let (m, c) = (self.mass, self.c);
        match self.structure {
            Structure::Oscillator { schedule } => {
                let k = schedule.eval(t);
                StateMat::new(1.0, dt, 0.0, -dt * k / m, 1.0 - dt * c / m, 0.0, 0.0, 0.0, 0.0)
            }
            Structure::ColoredForcing { k, tau } => StateMat::new(
                1.0,
                dt,
                0.0,
                -dt * k / m,
                1.0 - dt * c / m,
                dt / m,
                0.0,
                0.0,
                1.0 - dt / tau,
            ),
            Structure::Augmented { .. } => StateMat::new(
                1.0,
                dt,
                0.0,
                -dt * x[2] / m,
                1.0 - dt * c / m,
                -dt * x[0] / m,
                0.0,
                0.0,
                1.0,
            ),
        }
    }

    #[inline]
    fn jacobian_noise(&self, _x: &StateVec, _t: f64, dt: f64) -> NoiseMat {
        let sdt = dt.sqrt();
        match self.structure {
            Structure::Oscillator { .. } => NoiseMat::new(0.0, 0.0, sdt * self.sigma, 0.0, 0.0, 0.0),
            Structure::ColoredForcing { .. } => NoiseMat::new(0.0, 0.0, 0.0, 0.0, sdt * self.sigma, 0.0),
            Structure::Augmented { gamma, .. } => {
                NoiseMat::new(0.0, 0.0, sdt * self.sigma / self.mass, 0.0, 0.0, sdt * gamma)
            }
        }
    }
}
