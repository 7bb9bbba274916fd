//! Two-agent corridor with goals at both ends and one in the middle.
//!
//! Cells run from `-E` to `+E`; goals sit at `-E`, `0` and `+E`. Agent A
//! starts at `-1`, agent B at `+1`. Heading for the middle goal is the
//! "defect" move; walking to one's own end goal is "cooperate".

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvStep, Environment};
use crate::error::{Error, Result};
use crate::topology::SharingGraph;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct PrisonerConfig {
    /// Goal offset `E`; the corridor is `[-E, E]`.
    pub end_offset: i32,
    pub step_cost: f64,
    pub horizon: usize,
}

impl Default for PrisonerConfig {
    fn default() -> Self {
        Self {
            end_offset: 4,
            step_cost: 0.01,
            horizon: 50,
        }
    }
}

impl PrisonerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.end_offset < 2 {
            return Err(Error::Env(format!(
                "end offset E = {} must be at least 2",
                self.end_offset
            )));
        }
        if !self.step_cost.is_finite() {
            return Err(Error::Env("step cost must be finite".into()));
        }
        Ok(())
    }

    pub fn is_goal(&self, pos: i32) -> bool {
        pos == 0 || pos.abs() == self.end_offset
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrisonerState {
    pub pos_a: i32,
    pub pos_b: i32,
    pub t: usize,
}

impl PrisonerState {
    pub fn start() -> Self {
        Self {
            pos_a: -1,
            pos_b: 1,
            t: 0,
        }
    }
}

/// One possible result of a joint move.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub probability: f64,
    pub next: PrisonerState,
    pub rewards: [f64; 2],
    pub done: bool,
}

/// All outcomes of applying `actions` in `state`. A simultaneous arrival at
/// the middle goal splits into two equally likely outcomes (A wins, B wins).
pub fn prisoner_outcomes(
    config: &PrisonerConfig,
    state: PrisonerState,
    actions: [usize; 2],
) -> Result<Vec<Outcome>> {
    let e = config.end_offset;
    let shift = |pos: i32, a: usize| -> Result<i32> {
        match a {
            LEFT => Ok((pos - 1).max(-e)),
            RIGHT => Ok((pos + 1).min(e)),
            other => Err(Error::Env(format!("prisoner action {other} is not left/right"))),
        }
    };
    let next = PrisonerState {
        pos_a: shift(state.pos_a, actions[0])?,
        pos_b: shift(state.pos_b, actions[1])?,
        t: state.t + 1,
    };
    let c = config.step_cost;
    let goal_a = config.is_goal(next.pos_a);
    let goal_b = config.is_goal(next.pos_b);
    let done = goal_a || goal_b || next.t >= config.horizon;
    let base = |ra: f64, rb: f64, probability: f64| Outcome {
        probability,
        next,
        rewards: [ra - c, rb - c],
        done,
    };
    let bonus = |hit: bool| if hit { 1.0 } else { 0.0 };
    if next.pos_a == 0 && next.pos_b == 0 {
        Ok(vec![base(1.0, 0.0, 0.5), base(0.0, 1.0, 0.5)])
    } else {
        Ok(vec![base(bonus(goal_a), bonus(goal_b), 1.0)])
    }
}

/// Seeded corridor environment.
#[derive(Clone, Debug)]
pub struct Prisoner {
    config: PrisonerConfig,
    state: PrisonerState,
    done: bool,
    rng: ChaCha8Rng,
    graph: SharingGraph,
}

impl Prisoner {
    pub fn new(config: PrisonerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: PrisonerState::start(),
            done: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
            graph: SharingGraph::fully_connected(2),
        })
    }

    pub fn config(&self) -> &PrisonerConfig {
        &self.config
    }

    pub fn state(&self) -> PrisonerState {
        self.state
    }

    /// Agent-centric view: own position first, both scaled by `1/E`.
    pub fn observe(&self, state: PrisonerState) -> Vec<Vec<f64>> {
        let e = self.config.end_offset as f64;
        let (a, b) = (state.pos_a as f64 / e, state.pos_b as f64 / e);
        vec![vec![a, b], vec![b, a]]
    }

    fn emit(&self, rewards: Vec<f64>) -> EnvStep {
        EnvStep {
            observations: self.observe(self.state),
            rewards,
            done: self.done,
            graph: self.graph.clone(),
        }
    }
}

impl Environment for Prisoner {
    fn n_agents(&self) -> usize {
        2
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn k_max(&self) -> usize {
        1
    }

    fn reset(&mut self) -> Result<EnvStep> {
        self.state = PrisonerState::start();
        self.done = false;
        Ok(self.emit(vec![0.0, 0.0]))
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        if self.done {
            return Err(Error::Env("step called on a finished prisoner episode".into()));
        }
        crate::error::dim("prisoner actions", 2, actions.len())?;
        let outcomes = prisoner_outcomes(&self.config, self.state, [actions[0], actions[1]])?;
        let pick = if outcomes.len() > 1 && self.rng.random_bool(0.5) {
            1
        } else {
            0
        };
        let o = outcomes[pick];
        self.state = o.next;
        self.done = o.done;
        Ok(self.emit(o.rewards.to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Prisoner {
        Prisoner::new(PrisonerConfig::default(), 0).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn reset_observations() {
        let mut p = env();
        let s = p.reset().unwrap();
        assert_eq!(s.observations, vec![vec![-0.25, 0.25], vec![0.25, -0.25]]);
        assert_eq!(s.graph, SharingGraph::fully_connected(2));
        assert!(!s.done);
    }

    #[test]
    fn rejects_short_corridor() {
        let cfg = PrisonerConfig {
            end_offset: 1,
            ..Default::default()
        };
        assert!(Prisoner::new(cfg, 0).is_err());
        let cfg = PrisonerConfig {
            end_offset: 2,
            ..Default::default()
        };
        let p = Prisoner::new(cfg.clone(), 0).unwrap();
        let s = p.state();
        assert!(cfg.is_goal(s.pos_a - 1) && cfg.is_goal(s.pos_a + 1));
        assert!(cfg.is_goal(s.pos_b - 1) && cfg.is_goal(s.pos_b + 1));
    }

    #[test]
    fn zero_horizon_ends_after_first_step() {
        let cfg = PrisonerConfig {
            horizon: 0,
            ..Default::default()
        };
        let mut p = Prisoner::new(cfg, 0).unwrap();
        p.reset().unwrap();
        assert!(p.step(&[LEFT, RIGHT]).unwrap().done);
    }

    #[test]
    fn defect_against_cooperator() {
        let mut p = env();
        p.reset().unwrap();
        let s = p.step(&[RIGHT, RIGHT]).unwrap();
        assert!(close(&s.rewards, &[0.99, -0.01]));
        assert!(s.done);
        assert!(p.step(&[RIGHT, RIGHT]).is_err());
    }

    #[test]
    fn collision_awards_one_agent() {
        let mut seen = [false; 2];
        for seed in 0..64 {
            let mut p = Prisoner::new(PrisonerConfig::default(), seed).unwrap();
            p.reset().unwrap();
            let s = p.step(&[RIGHT, LEFT]).unwrap();
            assert!(s.done);
            if close(&s.rewards, &[0.99, -0.01]) {
                seen[0] = true;
            } else {
                assert!(close(&s.rewards, &[-0.01, 0.99]));
                seen[1] = true;
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn cooperation_takes_three_steps() {
        let mut p = env();
        p.reset().unwrap();
        let mut ret = [0.0; 2];
        for k in 0..3 {
            let s = p.step(&[LEFT, RIGHT]).unwrap();
            ret[0] += s.rewards[0];
            ret[1] += s.rewards[1];
            assert_eq!(s.done, k == 2);
        }
        assert!(close(&ret, &[0.97, 0.97]));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let run = |seed| {
            let mut p = Prisoner::new(PrisonerConfig::default(), seed).unwrap();
            let mut out = vec![p.reset().unwrap()];
            out.push(p.step(&[RIGHT, LEFT]).unwrap());
            out
        };
        for seed in 0..8 {
            assert_eq!(run(seed), run(seed));
        }
    }
}
