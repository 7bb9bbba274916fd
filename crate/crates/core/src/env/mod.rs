//! Environments behind a common stepping contract.

mod foraging;
mod matrix;
mod prisoner;

pub use foraging::{ForagingAction, ForagingConfig, ForagingState, Foraging};
pub use matrix::{MatrixGame, MatrixGameEnv};
/// Corridor action indices.
pub mod prisoner_actions {
    pub use super::prisoner::{LEFT, RIGHT};
}

pub use prisoner::{prisoner_outcomes, Outcome, Prisoner, PrisonerConfig, PrisonerState};

use crate::error::Result;
use crate::topology::SharingGraph;

/// Result of one reset or tick.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvStep {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub graph: SharingGraph,
}

pub trait Environment {
    fn n_agents(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn obs_dim(&self) -> usize;
    /// Upper bound on any agent's neighbor count, used to size policy outputs.
    fn k_max(&self) -> usize;
    fn reset(&mut self) -> Result<EnvStep>;
    fn step(&mut self, actions: &[usize]) -> Result<EnvStep>;
    /// Bound on the mean per-step reward reachable from the current episode's
    /// initial state, when the environment can compute one.
    fn reward_upper_bound(&self) -> Option<f64> {
        None
    }
}

/// Environment selection carried by a run configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvSpec {
    Prisoner(PrisonerConfig),
    Foraging(ForagingConfig),
    Matrix(MatrixGame),
}

impl EnvSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn Environment + Send>> {
        Ok(match self {
            EnvSpec::Prisoner(c) => Box::new(Prisoner::new(c.clone(), seed)?),
            EnvSpec::Foraging(c) => Box::new(Foraging::new(c.clone(), seed)?),
            EnvSpec::Matrix(g) => Box::new(MatrixGameEnv::new(g.clone())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Prisoner(_) => "prisoner",
            EnvSpec::Foraging(_) => "foraging",
            EnvSpec::Matrix(_) => "matrix",
        }
    }
}
