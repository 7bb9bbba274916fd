//! Exact and reference solutions: joint value iteration on the corridor,
//! the induced 2x2 game, and thin wrappers around the trainer for the
//! no-sharing and frozen-sharing learners.

use std::collections::HashMap;

use crate::env::{prisoner_outcomes, EnvSpec, ForagingConfig, MatrixGame, PrisonerConfig, PrisonerState};
use crate::env::{Foraging, Environment};
use crate::error::{Error, Result};
use crate::trainer::{Method, RunConfig, TrainOutcome, Trainer};

pub const JOINT_ACTIONS: [[usize; 2]; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];

/// One successor of a joint action; `next == None` is the terminal state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointTransition {
    pub probability: f64,
    pub next: Option<usize>,
    /// Sum of both agents' rewards.
    pub reward: f64,
    pub rewards: [f64; 2],
}

/// The corridor as a centralized MDP over `(pos_a, pos_b)`.
///
/// Time is not part of the state; episodes of the optimal policy end long
/// before the horizon.
#[derive(Clone, Debug)]
pub struct JointMdp {
    pub config: PrisonerConfig,
    pub states: Vec<(i32, i32)>,
    /// `transitions[s][a]` for the joint actions in [`JOINT_ACTIONS`].
    pub transitions: Vec<[Vec<JointTransition>; 4]>,
    pub start: usize,
}

impl JointMdp {
    pub fn build(config: &PrisonerConfig) -> Result<Self> {
        config.validate()?;
        let e = config.end_offset;
        let mut states = Vec::new();
        let mut index = HashMap::new();
        for a in -e..=e {
            for b in -e..=e {
                if !config.is_goal(a) && !config.is_goal(b) {
                    index.insert((a, b), states.len());
                    states.push((a, b));
                }
            }
        }
        let untimed = PrisonerConfig {
            horizon: usize::MAX,
            ..config.clone()
        };
        let mut transitions = Vec::with_capacity(states.len());
        for &(pa, pb) in &states {
            let state = PrisonerState { pos_a: pa, pos_b: pb, t: 0 };
            let mut row: [Vec<JointTransition>; 4] = Default::default();
            for (k, &act) in JOINT_ACTIONS.iter().enumerate() {
                for o in prisoner_outcomes(&untimed, state, act)? {
                    let next = if o.done {
                        None
                    } else {
                        Some(index[&(o.next.pos_a, o.next.pos_b)])
                    };
                    row[k].push(JointTransition {
                        probability: o.probability,
                        next,
                        reward: o.rewards[0] + o.rewards[1],
                        rewards: o.rewards,
                    });
                }
            }
            transitions.push(row);
        }
        let start = PrisonerState::start();
        Ok(Self {
            config: config.clone(),
            start: index[&(start.pos_a, start.pos_b)],
            states,
            transitions,
        })
    }

    /// Non-terminal states plus the terminal one.
    pub fn n_states(&self) -> usize {
        self.states.len() + 1
    }

    fn q(&self, v: &[f64], s: usize, a: usize, gamma: f64) -> f64 {
        self.transitions[s][a]
            .iter()
            .map(|t| t.probability * (t.reward + gamma * t.next.map_or(0.0, |n| v[n])))
            .sum()
    }
}

#[derive(Clone, Debug)]
pub struct ValueIteration {
    /// Optimal values of the non-terminal states (terminal is 0).
    pub values: Vec<f64>,
    /// Greedy joint action index per state, ties to the lowest index.
    pub policy: Vec<usize>,
    /// Sup-norm Bellman residual after each sweep.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub n_states: usize,
    /// Expected per-agent undiscounted return of the greedy policy from the
    /// start state over the corridor horizon.
    pub optimal_average_return: f64,
}

pub const MAX_SWEEPS: usize = 100_000;

/// Bellman optimality sweeps on the summed reward until the sup-norm residual
/// falls below `tol`.
pub fn value_iterate(mdp: &JointMdp, gamma: f64, tol: f64) -> Result<ValueIteration> {
    if !(tol > 0.0) {
        return Err(Error::Oracle(format!("tolerance {tol} must be positive")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Oracle(format!("gamma = {gamma} outside [0, 1]")));
    }
    let n = mdp.states.len();
    let mut v = vec![0.0; n];
    let mut residuals = Vec::new();
    loop {
        let next: Vec<f64> = (0..n)
            .map(|s| (0..4).map(|a| mdp.q(&v, s, a, gamma)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let res = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        residuals.push(res);
        if res < tol {
            break;
        }
        if residuals.len() >= MAX_SWEEPS {
            return Err(Error::Oracle(format!(
                "value iteration did not converge in {MAX_SWEEPS} sweeps (residual {res})"
            )));
        }
    }
    let policy: Vec<usize> = (0..n)
        .map(|s| {
            let qs: Vec<f64> = (0..4).map(|a| mdp.q(&v, s, a, gamma)).collect();
            crate::low_level::argmax(&qs)
        })
        .collect();
    let optimal_average_return = evaluate_joint_policy(mdp, &policy, mdp.config.horizon) / 2.0;
    Ok(ValueIteration {
        values: v,
        policy,
        iterations: residuals.len(),
        residuals,
        n_states: mdp.n_states(),
        optimal_average_return,
    })
}

/// Expected undiscounted summed return of a stationary joint policy from the
/// start state, truncated at `horizon` steps.
pub fn evaluate_joint_policy(mdp: &JointMdp, policy: &[usize], horizon: usize) -> f64 {
    let mut v = vec![0.0; mdp.states.len()];
    for _ in 0..horizon {
        v = (0..mdp.states.len()).map(|s| mdp.q(&v, s, policy[s], 1.0)).collect();
    }
    v[mdp.start]
}

/// Optimal per-agent average return for a corridor (discount 0.99).
pub fn prisoner_optimum(config: &PrisonerConfig) -> Result<ValueIteration> {
    value_iterate(&JointMdp::build(config)?, 0.99, 1e-10)
}

/// Expected returns when each agent commits to always cooperating (walking
/// outward) or always defecting (walking to the middle). Index 0 is C.
pub fn prisoner_payoff_matrix(config: &PrisonerConfig) -> Result<MatrixGame> {
    config.validate()?;
    fn expect(config: &PrisonerConfig, state: PrisonerState, actions: [usize; 2]) -> Result<[f64; 2]> {
        let mut total = [0.0; 2];
        for o in prisoner_outcomes(config, state, actions)? {
            let tail = if o.done { [0.0; 2] } else { expect(config, o.next, actions)? };
            for k in 0..2 {
                total[k] += o.probability * (o.rewards[k] + tail[k]);
            }
        }
        Ok(total)
    }
    use crate::env::prisoner_actions::{LEFT, RIGHT};
    // A cooperates by going left, B by going right.
    let act = |a: usize, b: usize| [if a == 0 { LEFT } else { RIGHT }, if b == 0 { RIGHT } else { LEFT }];
    let mut payoffs = [[[0.0; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            payoffs[a][b] = expect(config, PrisonerState::start(), act(a, b))?;
        }
    }
    MatrixGame::new(payoffs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixAnalysis {
    pub nash: Vec<(usize, usize)>,
    /// Profiles of maximal summed payoff.
    pub welfare_optimal: Vec<(usize, usize)>,
    /// Unique pure Nash equilibrium that is not welfare optimal.
    pub dilemma: bool,
}

pub fn analyze_matrix_game(game: &MatrixGame) -> MatrixAnalysis {
    const TOL: f64 = 1e-12;
    let profiles = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let nash: Vec<(usize, usize)> = profiles
        .iter()
        .copied()
        .filter(|&(a, b)| {
            game.payoff(a, b)[0] + TOL >= game.payoff(1 - a, b)[0]
                && game.payoff(a, b)[1] + TOL >= game.payoff(a, 1 - b)[1]
        })
        .collect();
    let welfare = |(a, b): (usize, usize)| game.payoff(a, b)[0] + game.payoff(a, b)[1];
    let best = profiles.iter().map(|&p| welfare(p)).fold(f64::NEG_INFINITY, f64::max);
    let welfare_optimal: Vec<(usize, usize)> =
        profiles.iter().copied().filter(|&p| welfare(p) + TOL >= best).collect();
    let dilemma = nash.len() == 1 && !welfare_optimal.contains(&nash[0]);
    MatrixAnalysis {
        nash,
        welfare_optimal,
        dilemma,
    }
}

/// Per-agent learners on raw rewards.
pub fn independent_q(config: &RunConfig, seed: u64) -> Result<TrainOutcome> {
    Trainer::new(config.clone(), Method::Independent, seed)?.train()
}

/// The full pipeline with sharing weights frozen at selfishness `s0`.
pub fn fixed_ltos(config: &RunConfig, s0: f64, seed: u64) -> Result<TrainOutcome> {
    let config = RunConfig {
        selfishness: s0,
        ..config.clone()
    };
    Trainer::new(config, Method::Fixed, seed)?.train()
}

/// Loose bound on the mean per-step reward of a foraging episode started
/// from `seed`'s first reset.
pub fn foraging_reward_bound(config: &ForagingConfig, seed: u64) -> Result<f64> {
    let mut env = Foraging::new(config.clone(), seed)?;
    env.reset()?;
    env.reward_upper_bound()
        .ok_or_else(|| Error::Oracle("foraging bound unavailable".into()))
}

/// Oracle summary for a configuration, if its environment has one.
pub fn oracle_for(spec: &EnvSpec) -> Result<ValueIteration> {
    match spec {
        EnvSpec::Prisoner(c) => prisoner_optimum(c),
        other => Err(Error::Oracle(format!("no exact oracle for `{}`", other.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_corridor_optimum() {
        let vi = prisoner_optimum(&PrisonerConfig::default()).unwrap();
        assert!((vi.optimal_average_return - 0.97).abs() < 1e-9);
        assert!(vi.n_states <= 81 + 1);
        let mdp = JointMdp::build(&PrisonerConfig::default()).unwrap();
        // Both walk outward: A left, B right.
        assert_eq!(JOINT_ACTIONS[vi.policy[mdp.start]], [0, 1]);
    }

    #[test]
    fn short_corridor_optimum() {
        let c = PrisonerConfig {
            end_offset: 2,
            ..Default::default()
        };
        let vi = prisoner_optimum(&c).unwrap();
        assert!((vi.optimal_average_return - 0.99).abs() < 1e-9);
    }

    #[test]
    fn myopic_optimum() {
        let mdp = JointMdp::build(&PrisonerConfig::default()).unwrap();
        let vi = value_iterate(&mdp, 0.0, 1e-12).unwrap();
        assert!((vi.values[mdp.start] - 0.98).abs() < 1e-12);
    }

    #[test]
    fn rows_are_stochastic_and_residuals_monotone() {
        let mdp = JointMdp::build(&PrisonerConfig::default()).unwrap();
        for row in &mdp.transitions {
            for outs in row {
                let p: f64 = outs.iter().map(|t| t.probability).sum();
                assert!((p - 1.0).abs() < 1e-12);
            }
        }
        let vi = value_iterate(&mdp, 0.99, 1e-12).unwrap();
        assert!(vi.residuals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn bad_tolerance() {
        let mdp = JointMdp::build(&PrisonerConfig::default()).unwrap();
        assert!(value_iterate(&mdp, 0.9, 0.0).is_err());
    }

    #[test]
    fn corridor_payoffs_and_dilemma() {
        let g = prisoner_payoff_matrix(&PrisonerConfig::default()).unwrap();
        let close = |x: [f64; 2], y: [f64; 2]| (x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12;
        assert!(close(g.payoff(0, 0), [0.97, 0.97]));
        assert!(close(g.payoff(1, 1), [0.49, 0.49]));
        assert!(close(g.payoff(1, 0), [0.99, -0.01]));
        assert!(close(g.payoff(0, 1), [-0.01, 0.99]));
        let a = analyze_matrix_game(&g);
        assert_eq!(a.nash, vec![(1, 1)]);
        assert_eq!(a.welfare_optimal, vec![(0, 0)]);
        assert!(a.dilemma);
    }

    #[test]
    fn coordination_and_zero_games() {
        let coord = MatrixGame::new([[[1.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 1.0]]]).unwrap();
        let a = analyze_matrix_game(&coord);
        assert_eq!(a.nash, vec![(0, 0), (1, 1)]);
        assert!(!a.dilemma);
        let zero = MatrixGame::new([[[0.0; 2]; 2]; 2]).unwrap();
        let z = analyze_matrix_game(&zero);
        assert_eq!(z.nash.len(), 4);
        assert_eq!(z.welfare_optimal.len(), 4);
        assert!(!z.dilemma);
    }

    #[test]
    fn payoff_matrix_bounded_by_oracle() {
        for e in 2..7 {
            let c = PrisonerConfig {
                end_offset: e,
                ..Default::default()
            };
            let g = prisoner_payoff_matrix(&c).unwrap();
            let opt = prisoner_optimum(&c).unwrap().optimal_average_return;
            for a in 0..2 {
                for b in 0..2 {
                    let p = g.payoff(a, b);
                    assert!((p[0] + p[1]) / 2.0 <= opt + 1e-6);
                }
            }
        }
    }
}
