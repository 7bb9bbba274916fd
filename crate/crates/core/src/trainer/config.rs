use crate::env::{EnvSpec, ForagingConfig, MatrixGame, PrisonerConfig};
use crate::error::{Error, Result};
use crate::high_level::NoiseSpec;
use crate::low_level::EpsilonSchedule;
use crate::nn::{Init, OptimizerKind};

/// Which learner a run trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Learned sharing weights.
    Ltos,
    /// Sharing weights frozen at the selfishness initializer.
    Fixed,
    /// No sharing: every agent keeps its own reward.
    Independent,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ltos => "ltos",
            Method::Fixed => "fixed",
            Method::Independent => "independent",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CadenceUnit {
    Step,
    Episode,
}

/// Full experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub env: EnvSpec,
    pub gamma: f64,
    pub tau: f64,
    pub low_lr: f64,
    pub high_lr: f64,
    pub low_optimizer: OptimizerKind,
    pub high_optimizer: OptimizerKind,
    pub epsilon: EpsilonSchedule,
    pub epsilon_unit: CadenceUnit,
    pub noise: NoiseSpec,
    /// Multiply the noise sigma by the current exploration rate.
    pub noise_scales_with_epsilon: bool,
    pub low_sample_size: usize,
    pub low_batch_size: usize,
    pub high_sample_size: usize,
    pub high_batch_size: usize,
    pub buffer_capacity: usize,
    /// Low-level update every this many environment steps.
    pub low_update_every: u64,
    /// `None` disables high-level updates.
    pub high_update_every: Option<u64>,
    pub high_update_unit: CadenceUnit,
    /// Steps a high-level decision is held.
    pub action_interval: usize,
    pub selfishness: f64,
    /// Neighbor count the selfishness initializer is calibrated for.
    pub selfishness_k: Option<usize>,
    pub episodes: usize,
    /// Stop once this many environment steps have been taken.
    pub max_steps: Option<u64>,
    pub hidden: [usize; 2],
    pub high_hidden: [usize; 2],
    pub init: Init,
    /// Greedy evaluation episodes run after every training episode.
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
}

impl RunConfig {
    /// Prisoner column of the hyperparameter tables.
    pub fn prisoner() -> Self {
        Self {
            env: EnvSpec::Prisoner(PrisonerConfig::default()),
            gamma: 0.99,
            tau: 0.1,
            low_lr: 1e-3,
            high_lr: 1e-1,
            low_optimizer: OptimizerKind::Adam,
            high_optimizer: OptimizerKind::Sgd,
            epsilon: EpsilonSchedule {
                start: 0.8,
                decay: 1.0,
                end: 0.8,
            },
            epsilon_unit: CadenceUnit::Episode,
            noise: NoiseSpec::EpsilonGaussian {
                epsilon: 0.8,
                sigma: 1.0,
            },
            noise_scales_with_epsilon: false,
            low_sample_size: 10,
            low_batch_size: 10,
            high_sample_size: 2000,
            high_batch_size: 32,
            buffer_capacity: 200_000,
            low_update_every: 1,
            high_update_every: Some(1),
            high_update_unit: CadenceUnit::Step,
            action_interval: 1,
            selfishness: 0.5,
            selfishness_k: None,
            episodes: 20_000,
            max_steps: Some(20_000),
            hidden: [32, 32],
            high_hidden: [32, 32],
            init: Init::UniformFanIn,
            eval_episodes: 1,
            seeds: vec![1, 2, 3, 4, 5],
        }
    }

    /// Jungle column of the hyperparameter tables on the desk-scale grid.
    pub fn foraging() -> Self {
        Self {
            env: EnvSpec::Foraging(ForagingConfig::default()),
            gamma: 0.96,
            tau: 0.01,
            low_lr: 1e-4,
            high_lr: 1e-4,
            epsilon: EpsilonSchedule {
                start: 0.6,
                decay: 0.996,
                end: 0.01,
            },
            noise: NoiseSpec::OrnsteinUhlenbeck {
                sigma: 0.025,
                theta: 0.15,
            },
            noise_scales_with_epsilon: true,
            high_sample_size: 5000,
            high_update_every: Some(100),
            high_update_unit: CadenceUnit::Episode,
            episodes: 1000,
            max_steps: None,
            hidden: [512, 128],
            high_hidden: [32, 32],
            ..Self::prisoner()
        }
    }

    /// One-shot matrix game; defaults follow the prisoner column.
    pub fn matrix(game: MatrixGame) -> Self {
        Self {
            env: EnvSpec::Matrix(game),
            ..Self::prisoner()
        }
    }

    pub fn for_env_name(name: &str) -> Result<Self> {
        match name {
            "prisoner" => Ok(Self::prisoner()),
            "foraging" | "jungle" => Ok(Self::foraging()),
            "matrix" => Ok(Self::matrix(crate::oracle::prisoner_payoff_matrix(
                &PrisonerConfig::default(),
            )?)),
            other => Err(Error::Param(format!("unknown environment `{other}`"))),
        }
    }

    /// Neighbor count used to calibrate the selfishness initializer.
    pub fn selfishness_k_active(&self) -> usize {
        self.selfishness_k.unwrap_or(match &self.env {
            EnvSpec::Foraging(c) => c.effective_k().max(1),
            _ => 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Param(msg));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma = {} outside [0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau = {} outside [0, 1]", self.tau));
        }
        if !(self.low_lr > 0.0 && self.high_lr > 0.0) {
            return bad("learning rates must be positive".into());
        }
        let eps = self.epsilon;
        for v in [eps.start, eps.end] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("exploration rate {v} outside [0, 1]"));
            }
        }
        if !(eps.decay > 0.0) {
            return bad("epsilon decay must be positive".into());
        }
        match self.noise {
            NoiseSpec::EpsilonGaussian { epsilon, sigma } => {
                if !(0.0..=1.0).contains(&epsilon) || sigma < 0.0 {
                    return bad("noise epsilon must be in [0, 1] and sigma >= 0".into());
                }
            }
            NoiseSpec::OrnsteinUhlenbeck { sigma, theta } => {
                if sigma < 0.0 || !(0.0..=1.0).contains(&theta) {
                    return bad("OU sigma must be >= 0 and theta in [0, 1]".into());
                }
            }
            NoiseSpec::None => {}
        }
        if self.low_batch_size == 0 || self.high_batch_size == 0 {
            return bad("batch sizes must be positive".into());
        }
        if self.low_sample_size < self.low_batch_size || self.high_sample_size < self.high_batch_size {
            return bad("sample size must be at least the batch size".into());
        }
        if self.buffer_capacity < self.low_sample_size {
            return bad("buffer capacity below the low-level sample size".into());
        }
        if self.low_update_every == 0 || self.high_update_every == Some(0) {
            return bad("update frequencies must be at least 1".into());
        }
        if self.action_interval == 0 {
            return bad("action interval M must be at least 1".into());
        }
        if !(self.selfishness > 0.0 && self.selfishness < 1.0) {
            return bad(format!("selfishness {} outside (0, 1)", self.selfishness));
        }
        if self.selfishness_k == Some(0) {
            return bad("selfishness_k must be at least 1".into());
        }
        if self.hidden.contains(&0) || self.high_hidden.contains(&0) {
            return bad("hidden layer sizes must be positive".into());
        }
        if let Init::Normal { std } = self.init {
            if !(std >= 0.0) {
                return bad("normal init std must be non-negative".into());
            }
        }
        match &self.env {
            EnvSpec::Prisoner(c) => c.validate()?,
            EnvSpec::Foraging(c) => c.validate()?,
            EnvSpec::Matrix(_) => {}
        }
        Ok(())
    }
}
