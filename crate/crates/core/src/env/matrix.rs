//! One-shot 2x2 bimatrix game.

use super::{EnvStep, Environment};
use crate::error::{Error, Result};
use crate::topology::SharingGraph;

/// `payoffs[a][b] = (reward of row player, reward of column player)` when the
/// row player picks `a` and the column player picks `b`. Index 0 is
/// "cooperate", 1 is "defect" for dilemma games.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame {
    pub payoffs: [[[f64; 2]; 2]; 2],
}

impl MatrixGame {
    pub fn new(payoffs: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        if payoffs.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Param("matrix game payoffs must be finite".into()));
        }
        Ok(Self { payoffs })
    }

    pub fn payoff(&self, a: usize, b: usize) -> [f64; 2] {
        self.payoffs[a][b]
    }
}

/// Single-step environment wrapper around a [`MatrixGame`].
#[derive(Clone, Debug)]
pub struct MatrixGameEnv {
    game: MatrixGame,
    done: bool,
}

impl MatrixGameEnv {
    pub fn new(game: MatrixGame) -> Self {
        Self { game, done: true }
    }

    fn emit(&self, rewards: Vec<f64>) -> EnvStep {
        EnvStep {
            observations: vec![vec![1.0], vec![1.0]],
            rewards,
            done: self.done,
            graph: SharingGraph::fully_connected(2),
        }
    }
}

impl Environment for MatrixGameEnv {
    fn n_agents(&self) -> usize {
        2
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn k_max(&self) -> usize {
        1
    }

    fn reset(&mut self) -> Result<EnvStep> {
        self.done = false;
        Ok(self.emit(vec![0.0, 0.0]))
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        if self.done {
            return Err(Error::Env("matrix game already played".into()));
        }
        crate::error::dim("matrix actions", 2, actions.len())?;
        if actions.iter().any(|&a| a > 1) {
            return Err(Error::Env("matrix game actions are 0 or 1".into()));
        }
        self.done = true;
        Ok(self.emit(self.game.payoff(actions[0], actions[1]).to_vec()))
    }
}
