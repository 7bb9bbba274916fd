//! Foraging grid: agents move or attack one of the four adjacent cells.
//!
//! Attacking a food cell pays +1; attacking another agent pays the attacker
//! +2 and costs the victim -4; attacking an empty cell costs -0.01. The
//! neighborhood graph is rebuilt from positions after every tick.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EnvStep, Environment};
use crate::error::{Error, Result};
use crate::topology::{nearest, SharingGraph};

pub const FOOD_REWARD: f64 = 1.0;
pub const ATTACK_REWARD: f64 = 2.0;
pub const VICTIM_REWARD: f64 = -4.0;
pub const BLANK_ATTACK_REWARD: f64 = -0.01;
/// Number of nearest foods encoded in each observation.
pub const FOOD_SLOTS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct ForagingConfig {
    pub grid: usize,
    pub n_agents: usize,
    pub n_foods: usize,
    pub k: usize,
    pub horizon: usize,
    /// Remove a food once it has been eaten.
    pub food_consumed: bool,
}

impl Default for ForagingConfig {
    fn default() -> Self {
        Self {
            grid: 10,
            n_agents: 8,
            n_foods: 5,
            k: 3,
            horizon: 120,
            food_consumed: false,
        }
    }
}

impl ForagingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 || self.n_agents == 0 {
            return Err(Error::Env("grid and agent count must be positive".into()));
        }
        if self.n_agents + self.n_foods > self.grid * self.grid {
            return Err(Error::Env(format!(
                "{} agents and {} foods do not fit on a {g}x{g} grid",
                self.n_agents,
                self.n_foods,
                g = self.grid
            )));
        }
        Ok(())
    }

    /// Effective neighbor count, capped by the population.
    pub fn effective_k(&self) -> usize {
        self.k.min(self.n_agents - 1)
    }

    pub fn obs_dim(&self) -> usize {
        2 + 2 * FOOD_SLOTS + 2 * self.effective_k()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForagingAction {
    Up,
    Down,
    Left,
    Right,
    AttackUp,
    AttackDown,
    AttackLeft,
    AttackRight,
}

impl ForagingAction {
    pub const ALL: [ForagingAction; 8] = [
        ForagingAction::Up,
        ForagingAction::Down,
        ForagingAction::Left,
        ForagingAction::Right,
        ForagingAction::AttackUp,
        ForagingAction::AttackDown,
        ForagingAction::AttackLeft,
        ForagingAction::AttackRight,
    ];

    pub fn from_index(a: usize) -> Result<Self> {
        Self::ALL
            .get(a)
            .copied()
            .ok_or_else(|| Error::Env(format!("foraging action {a} out of range")))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn delta(self) -> (i64, i64) {
        match self {
            ForagingAction::Up | ForagingAction::AttackUp => (0, -1),
            ForagingAction::Down | ForagingAction::AttackDown => (0, 1),
            ForagingAction::Left | ForagingAction::AttackLeft => (-1, 0),
            ForagingAction::Right | ForagingAction::AttackRight => (1, 0),
        }
    }

    fn is_attack(self) -> bool {
        self.index() >= 4
    }
}

pub type Cell = (i64, i64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForagingState {
    pub agents: Vec<Cell>,
    pub foods: Vec<Cell>,
    pub t: usize,
}

#[derive(Clone, Debug)]
pub struct Foraging {
    config: ForagingConfig,
    state: ForagingState,
    done: bool,
    rng: ChaCha8Rng,
    upper_bound: f64,
}

impl Foraging {
    pub fn new(config: ForagingConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: ForagingState {
                agents: Vec::new(),
                foods: Vec::new(),
                t: 0,
            },
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
            upper_bound: 0.0,
        })
    }

    pub fn config(&self) -> &ForagingConfig {
        &self.config
    }

    pub fn state(&self) -> &ForagingState {
        &self.state
    }

    /// Replaces the state, e.g. to stage a scenario; the episode becomes active.
    pub fn set_state(&mut self, state: ForagingState) -> Result<EnvStep> {
        let g = self.config.grid as i64;
        let mut cells: Vec<Cell> = state.agents.iter().chain(&state.foods).copied().collect();
        if cells.iter().any(|&(x, y)| x < 0 || y < 0 || x >= g || y >= g) {
            return Err(Error::Env("staged position outside the grid".into()));
        }
        cells.sort_unstable();
        if cells.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Env("staged positions overlap".into()));
        }
        if state.agents.len() != self.config.n_agents {
            return Err(Error::Env("staged agent count differs from config".into()));
        }
        self.state = state;
        self.done = false;
        self.upper_bound = self.compute_upper_bound();
        self.emit(vec![0.0; self.config.n_agents])
    }

    fn in_grid(&self, (x, y): Cell) -> bool {
        let g = self.config.grid as i64;
        (0..g).contains(&x) && (0..g).contains(&y)
    }

    fn positions(&self) -> Vec<[f64; 2]> {
        self.state
            .agents
            .iter()
            .map(|&(x, y)| [x as f64, y as f64])
            .collect()
    }

    fn graph(&self) -> Result<SharingGraph> {
        SharingGraph::knn(&self.positions(), self.config.effective_k())
    }

    fn observe(&self) -> Vec<Vec<f64>> {
        let scale = (self.config.grid.max(2) - 1) as f64;
        let positions = self.positions();
        let k = self.config.effective_k();
        (0..self.config.n_agents)
            .map(|i| {
                let (x, y) = self.state.agents[i];
                let mut o = Vec::with_capacity(self.config.obs_dim());
                o.push(x as f64 / scale);
                o.push(y as f64 / scale);

                let mut foods: Vec<(i64, usize)> = self
                    .state
                    .foods
                    .iter()
                    .enumerate()
                    .map(|(f, &(fx, fy))| ((fx - x).pow(2) + (fy - y).pow(2), f))
                    .collect();
                foods.sort_unstable();
                for slot in 0..FOOD_SLOTS {
                    match foods.get(slot) {
                        Some(&(_, f)) => {
                            let (fx, fy) = self.state.foods[f];
                            o.push((fx - x) as f64 / scale);
                            o.push((fy - y) as f64 / scale);
                        }
                        None => o.extend([0.0, 0.0]),
                    }
                }

                for j in nearest(&positions, i, k) {
                    let (nx, ny) = self.state.agents[j];
                    o.push((nx - x) as f64 / scale);
                    o.push((ny - y) as f64 / scale);
                }
                o
            })
            .collect()
    }

    fn emit(&self, rewards: Vec<f64>) -> Result<EnvStep> {
        Ok(EnvStep {
            observations: self.observe(),
            rewards,
            done: self.done,
            graph: self.graph()?,
        })
    }

    /// Mean over agents of the fraction of the horizon left after walking to
    /// the nearest food: every step before an agent can first eat is worth at
    /// most 0, and attacks on agents are negative-sum.
    fn compute_upper_bound(&self) -> f64 {
        let h = self.config.horizon as f64;
        if h == 0.0 || self.state.foods.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .state
            .agents
            .iter()
            .map(|&(x, y)| {
                let d = self
                    .state
                    .foods
                    .iter()
                    .map(|&(fx, fy)| (fx - x).abs() + (fy - y).abs())
                    .min()
                    .expect("foods nonempty");
                let wasted = (d - 1).max(0) as f64;
                ((h - wasted) / h).max(0.0)
            })
            .sum();
        total / self.state.agents.len() as f64
    }
}

impl Environment for Foraging {
    fn n_agents(&self) -> usize {
        self.config.n_agents
    }

    fn n_actions(&self) -> usize {
        ForagingAction::ALL.len()
    }

    fn obs_dim(&self) -> usize {
        self.config.obs_dim()
    }

    fn k_max(&self) -> usize {
        self.config.n_agents - 1
    }

    fn reset(&mut self) -> Result<EnvStep> {
        let g = self.config.grid;
        let n = self.config.n_agents;
        let cells = sample(&mut self.rng, g * g, n + self.config.n_foods).into_vec();
        let to_cell = |c: usize| ((c % g) as i64, (c / g) as i64);
        self.state = ForagingState {
            agents: cells[..n].iter().map(|&c| to_cell(c)).collect(),
            foods: cells[n..].iter().map(|&c| to_cell(c)).collect(),
            t: 0,
        };
        self.done = false;
        self.upper_bound = self.compute_upper_bound();
        self.emit(vec![0.0; n])
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        if self.done {
            return Err(Error::Env("step called on a finished foraging episode".into()));
        }
        let n = self.config.n_agents;
        crate::error::dim("foraging actions", n, actions.len())?;
        let actions = actions
            .iter()
            .map(|&a| ForagingAction::from_index(a))
            .collect::<Result<Vec<_>>>()?;

        let start = self.state.agents.clone();
        let agent_at = |c: Cell| start.iter().position(|&p| p == c);
        let food_at = |c: Cell| self.state.foods.iter().position(|&p| p == c);

        let mut rewards = vec![0.0; n];
        let mut eaten = vec![false; self.state.foods.len()];
        let mut targets: Vec<Option<Cell>> = vec![None; n];
        for (i, act) in actions.iter().enumerate() {
            let (dx, dy) = act.delta();
            let target = (start[i].0 + dx, start[i].1 + dy);
            if act.is_attack() {
                if let Some(f) = food_at(target) {
                    rewards[i] += FOOD_REWARD;
                    eaten[f] = true;
                } else if let Some(j) = agent_at(target) {
                    rewards[i] += ATTACK_REWARD;
                    rewards[j] += VICTIM_REWARD;
                } else {
                    rewards[i] += BLANK_ATTACK_REWARD;
                }
            } else if self.in_grid(target) && agent_at(target).is_none() && food_at(target).is_none()
            {
                targets[i] = Some(target);
            }
        }

        // Contested cells go to the lowest id; losers stay put.
        for i in 0..n {
            if let Some(t) = targets[i] {
                let beaten = (0..i).any(|j| targets[j] == Some(t));
                if !beaten {
                    self.state.agents[i] = t;
                }
            }
        }

        if self.config.food_consumed {
            let mut idx = 0;
            self.state.foods.retain(|_| {
                let keep = !eaten[idx];
                idx += 1;
                keep
            });
        }

        self.state.t += 1;
        self.done = self.state.t >= self.config.horizon;
        self.emit(rewards)
    }

    fn reward_upper_bound(&self) -> Option<f64> {
        Some(self.upper_bound)
    }
}
