//! Two-level training loop: rollouts with shaped rewards, synchronized replay,
//! and the coupled critic / sharing-policy updates.

mod config;
mod metrics;
mod replay;

pub use config::{CadenceUnit, Method, RunConfig};
pub use metrics::{
    episodes_to_threshold, final_window_mean, trace_to_csv, MetricsRow, MetricsTable, TraceRow,
    METRICS_HEADER,
};
pub use replay::ReplayBuffer;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{EnvStep, Environment};
use crate::error::{Error, Result};
use crate::high_level::{route_gradients, HighPolicy, NoiseProcess, NoiseSpec, PolicyRecord};
use crate::low_level::{QNetwork, QOptimizer, Transition};
use crate::nn::Optimizer;
use crate::sharing::{check_simplex, share_rewards, NeighborMap, WeightAssignment};
use crate::topology::{AgentId, SharingGraph};

/// Networks and optimizer state owned by one agent.
#[derive(Clone, Debug)]
pub struct AgentModels {
    pub q: QNetwork,
    pub q_target: QNetwork,
    pub phi: HighPolicy,
    pub phi_target: HighPolicy,
    q_opt: QOptimizer,
    phi_opt: Optimizer,
    noise: NoiseProcess,
}

pub const CHECKPOINT_FILES: [&str; 4] = ["q", "phi", "q_target", "phi_target"];

impl AgentModels {
    /// Writes `<dir>/{q,phi,q_target,phi_target}.bin`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<BufWriter<File>> {
            Ok(BufWriter::new(File::create(dir.join(format!("{name}.bin")))?))
        };
        self.q.write_to(&mut open("q")?)?;
        self.phi.write_to(&mut open("phi")?)?;
        self.q_target.write_to(&mut open("q_target")?)?;
        self.phi_target.write_to(&mut open("phi_target")?)?;
        Ok(())
    }

    /// Loads the four networks written by [`AgentModels::save`]; optimizer
    /// state starts fresh.
    pub fn load(dir: &Path, config: &RunConfig) -> Result<Self> {
        let open = |name: &str| -> Result<BufReader<File>> {
            let path = dir.join(format!("{name}.bin"));
            File::open(&path)
                .map(BufReader::new)
                .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
        };
        let q = QNetwork::read_from(&mut open("q")?)?;
        let phi = HighPolicy::read_from(&mut open("phi")?)?;
        let q_target = QNetwork::read_from(&mut open("q_target")?)?;
        let phi_target = HighPolicy::read_from(&mut open("phi_target")?)?;
        Ok(Self {
            q_opt: QOptimizer::new(config.low_optimizer, config.low_lr, &q),
            phi_opt: Optimizer::new(config.high_optimizer, config.high_lr, &phi.net),
            noise: NoiseProcess::new(config.noise, phi.k_max() + 1),
            q,
            q_target,
            phi,
            phi_target,
        })
    }
}

/// Invariant monitors accumulated over a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    /// Largest `|sum shaped - sum raw| / max(1, |sum raw|)` seen.
    pub max_conservation_error: f64,
    /// Largest `|sum_j w_ij - 1|` over all emitted weight vectors.
    pub max_simplex_error: f64,
    pub emissions: u64,
    pub low_updates: u64,
    pub high_updates: u64,
    /// Minibatch draws whose per-agent timestamps were compared.
    pub synchronized_draws: u64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub metrics: MetricsTable,
    pub stats: RunStats,
    /// Per-episode bound on the evaluation mean reward, when the environment
    /// provides one.
    pub reward_upper_bounds: Vec<Option<f64>>,
}

/// Result of a greedy evaluation episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub returns: Vec<f64>,
    pub mean_rewards: Vec<f64>,
    pub steps: usize,
    pub reward_upper_bound: Option<f64>,
}

#[derive(Clone, Debug, Default)]
struct EpisodeAccumulator {
    selfishness: Vec<f64>,
    emissions: usize,
    loss: Vec<f64>,
    loss_count: usize,
    returns: Vec<f64>,
    steps: usize,
}

impl EpisodeAccumulator {
    fn new(n: usize) -> Self {
        Self {
            selfishness: vec![0.0; n],
            loss: vec![0.0; n],
            returns: vec![0.0; n],
            ..Default::default()
        }
    }
}

/// Joint trainer for all agents of one seed.
pub struct Trainer {
    config: RunConfig,
    method: Method,
    seed: u64,
    env: Box<dyn Environment + Send>,
    eval_env: Box<dyn Environment + Send>,
    agents: Vec<AgentModels>,
    replay: ReplayBuffer,
    explore_rng: ChaCha8Rng,
    sample_rng: ChaCha8Rng,
    current: Option<EnvStep>,
    held: Option<(Vec<NeighborMap>, Vec<Vec<AgentId>>)>,
    held_age: usize,
    total_steps: u64,
    episode: u64,
    acc: EpisodeAccumulator,
    metrics: MetricsTable,
    stats: RunStats,
    upper_bounds: Vec<Option<f64>>,
    /// Per-agent timestamps of the most recent minibatch draw.
    pub last_draw: Vec<Vec<u64>>,
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Seed of the environment a trainer uses for greedy evaluation.
pub fn eval_env_seed(seed: u64) -> u64 {
    sub_seed(seed, 2)
}

impl Trainer {
    pub fn new(config: RunConfig, method: Method, seed: u64) -> Result<Self> {
        config.validate()?;
        let env = config.env.build(sub_seed(seed, 1))?;
        let eval_env = config.env.build(eval_env_seed(seed))?;
        let n = env.n_agents();
        let mut init_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 3));
        let k_active = config.selfishness_k_active();
        let mut agents = Vec::with_capacity(n);
        for _ in 0..n {
            let q = QNetwork::new(env.obs_dim(), env.n_actions(), config.hidden, config.init, &mut init_rng);
            let mut phi = HighPolicy::new(env.obs_dim(), env.k_max(), config.high_hidden, config.init, &mut init_rng);
            phi.init_selfishness(config.selfishness, k_active)?;
            agents.push(AgentModels {
                q_opt: QOptimizer::new(config.low_optimizer, config.low_lr, &q),
                phi_opt: Optimizer::new(config.high_optimizer, config.high_lr, &phi.net),
                noise: NoiseProcess::new(config.noise, env.k_max() + 1),
                q_target: q.clone(),
                phi_target: phi.clone(),
                q,
                phi,
            });
        }
        Ok(Self {
            replay: ReplayBuffer::new(n, config.buffer_capacity),
            explore_rng: ChaCha8Rng::seed_from_u64(sub_seed(seed, 4)),
            sample_rng: ChaCha8Rng::seed_from_u64(sub_seed(seed, 5)),
            acc: EpisodeAccumulator::new(n),
            config,
            method,
            seed,
            env,
            eval_env,
            agents,
            current: None,
            held: None,
            held_age: 0,
            total_steps: 0,
            episode: 0,
            metrics: MetricsTable::default(),
            stats: RunStats::default(),
            upper_bounds: Vec::new(),
            last_draw: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[AgentModels] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [AgentModels] {
        &mut self.agents
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn metrics(&self) -> &MetricsTable {
        &self.metrics
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn epsilon(&self) -> f64 {
        match self.config.epsilon_unit {
            CadenceUnit::Episode => self.config.epsilon.at(self.episode),
            CadenceUnit::Step => self.config.epsilon.at(self.total_steps),
        }
    }

    fn noise_scale(&self) -> f64 {
        if self.config.noise_scales_with_epsilon {
            self.epsilon()
        } else {
            1.0
        }
    }

    fn budget_exhausted(&self) -> bool {
        self.config.max_steps.is_some_and(|m| self.total_steps >= m)
    }

    /// Outgoing weights for the given state. Exploration noise only applies
    /// to learned sharing during training.
    fn emit(
        agents: &mut [AgentModels],
        method: Method,
        state: &EnvStep,
        explore: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<Vec<NeighborMap>> {
        let graph = &state.graph;
        let mut out = Vec::with_capacity(agents.len());
        match explore {
            Some((scale, rng)) if method == Method::Ltos => {
                for (i, m) in agents.iter_mut().enumerate() {
                    let noise = Some((&mut m.noise, scale));
                    out.push(m.phi.emit_weights(i, &state.observations[i], graph.neighbors(i), noise, rng)?);
                }
            }
            _ => {
                for (i, m) in agents.iter().enumerate() {
                    out.push(match method {
                        Method::Independent => NeighborMap::identity(i, graph.neighbors(i)),
                        _ => m.phi.weights(i, &state.observations[i], graph.neighbors(i))?,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Resets the training environment for a new episode.
    pub fn begin_episode(&mut self) -> Result<()> {
        self.current = Some(self.env.reset()?);
        self.held = None;
        self.held_age = 0;
        for m in &mut self.agents {
            m.noise.reset();
        }
        self.acc = EpisodeAccumulator::new(self.agents.len());
        Ok(())
    }

    /// One environment tick: emit or hold sharing weights, act, share the
    /// rewards, and push the joint transition. Returns whether the episode
    /// ended.
    pub fn rollout_step(&mut self) -> Result<bool> {
        if self.current.is_none() {
            self.begin_episode()?;
        }
        let state = self.current.take().expect("episode started");
        let graph = state.graph.clone();
        let n = self.agents.len();

        let reuse = self.held_age % self.config.action_interval != 0
            && self
                .held
                .as_ref()
                .is_some_and(|(_, nbrs)| nbrs.as_slice() == graph.neighborhoods());
        let w_out = if reuse {
            self.held.as_ref().expect("checked").0.clone()
        } else {
            self.held_age = 0;
            let scale = self.noise_scale();
            let w = Self::emit(&mut self.agents, self.method, &state, Some((scale, &mut self.explore_rng)))?;
            for m in &w {
                self.stats.emissions += 1;
                let err = (m.sum() - 1.0).abs();
                self.stats.max_simplex_error = self.stats.max_simplex_error.max(err);
            }
            self.held = Some((w.clone(), graph.neighborhoods().to_vec()));
            w
        };
        self.held_age += 1;
        let assignment = WeightAssignment::new(&graph, w_out)?;
        let w_in = assignment.all_incoming(&graph);

        let eps = self.epsilon();
        let mut actions = Vec::with_capacity(n);
        for (i, m) in self.agents.iter().enumerate() {
            actions.push(m.q.select_action(
                i,
                &state.observations[i],
                graph.neighbors(i),
                &w_in[i],
                eps,
                &mut self.explore_rng,
            )?);
        }

        let next = self.env.step(&actions)?;
        let shaped = share_rewards(&graph, &assignment, &next.rewards)?;
        let raw_sum: f64 = next.rewards.iter().sum();
        let shaped_sum: f64 = shaped.iter().sum();
        let err = (shaped_sum - raw_sum).abs() / raw_sum.abs().max(1.0);
        self.stats.max_conservation_error = self.stats.max_conservation_error.max(err);
        if err > 1e-9 {
            return Err(Error::Weights(format!(
                "reward conservation violated: shaped {shaped_sum} vs raw {raw_sum}"
            )));
        }

        let ts = self.total_steps;
        let records = (0..n)
            .map(|i| Transition {
                agent: i,
                timestamp: ts,
                o: state.observations[i].clone(),
                w_in: w_in[i].clone(),
                a: actions[i],
                r_w: shaped[i],
                o_next: next.observations[i].clone(),
                neighbors: graph.neighbors(i).to_vec(),
                neighbors_next: next.graph.neighbors(i).to_vec(),
                done: next.done,
            })
            .collect();
        self.replay.push(records)?;

        for i in 0..n {
            self.acc.selfishness[i] += assignment.outgoing(i).get(i).unwrap_or(0.0);
            self.acc.returns[i] += next.rewards[i];
        }
        self.acc.emissions += 1;
        self.acc.steps += 1;
        self.total_steps += 1;
        let done = next.done;
        if !done {
            self.current = Some(next);
        }
        Ok(done)
    }

    fn high_update_due(&self) -> bool {
        if self.method != Method::Ltos {
            return false;
        }
        let Some(every) = self.config.high_update_every else {
            return false;
        };
        let clock = match self.config.high_update_unit {
            CadenceUnit::Step => self.total_steps,
            CadenceUnit::Episode => self.episode,
        };
        clock % every == 0 && self.replay.len() >= self.config.high_sample_size
    }

    /// Incoming weights at every sampled timestep, emitted by the given
    /// policies (`target` selects the slow copies) on the chosen side of the
    /// transition.
    fn replay_incoming(&self, indices: &[usize], target: bool, next: bool) -> Result<Vec<Vec<NeighborMap>>> {
        let n = self.agents.len();
        let mut out = Vec::with_capacity(indices.len());
        for &idx in indices {
            let mut lists = Vec::with_capacity(n);
            let mut w_out = Vec::with_capacity(n);
            for (j, m) in self.agents.iter().enumerate() {
                let t = self.replay.get(j, idx);
                let (o, nbrs) = if next { (&t.o_next, &t.neighbors_next) } else { (&t.o, &t.neighbors) };
                let w = match self.method {
                    Method::Independent => NeighborMap::identity(j, nbrs),
                    _ => {
                        let pol = if target { &m.phi_target } else { &m.phi };
                        pol.weights(j, o, nbrs)?
                    }
                };
                check_simplex(&w).map_err(Error::Weights)?;
                lists.push(nbrs.clone());
                w_out.push(w);
            }
            let incoming: Vec<NeighborMap> = (0..n)
                .map(|i| {
                    let pairs = lists[i]
                        .iter()
                        .map(|&j| {
                            w_out[j].get(i).map(|w| (j, w)).ok_or_else(|| {
                                Error::Graph(format!("stored neighborhoods of {i} and {j} are asymmetric"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(NeighborMap::from_pairs(pairs))
                })
                .collect::<Result<_>>()?;
            out.push(incoming);
        }
        Ok(out)
    }

    /// One synchronized update. Returns per-agent TD losses, or `None` while
    /// the buffer holds fewer records than the low-level sample size.
    pub fn update_step(&mut self) -> Result<Option<Vec<f64>>> {
        if self.replay.len() < self.config.low_sample_size {
            return Ok(None);
        }
        let n = self.agents.len();
        let high = self.high_update_due();
        let low_b = self.config.low_batch_size;
        let high_b = self.config.high_batch_size;
        let draw = if high { low_b.max(high_b) } else { low_b };
        let indices = self.replay.sample(draw, &mut self.sample_rng)?;
        let stamps = self.replay.timestamps(&indices);
        if stamps.iter().any(|s| s != &stamps[0]) {
            return Err(Error::Replay("agents sampled different timesteps".into()));
        }
        self.stats.synchronized_draws += 1;
        self.last_draw = stamps;

        let low_idx = &indices[..low_b];
        let w_in_next = self.replay_incoming(low_idx, true, true)?;
        let mut losses = Vec::with_capacity(n);
        for i in 0..n {
            let mut targets = Vec::with_capacity(low_b);
            for (b, &idx) in low_idx.iter().enumerate() {
                let t = self.replay.get(i, idx);
                targets.push(self.agents[i].q_target.td_target(t, self.config.gamma, &w_in_next[b][i])?);
            }
            let batch: Vec<(&Transition, f64)> = low_idx
                .iter()
                .zip(targets)
                .map(|(&idx, y)| (self.replay.get(i, idx), y))
                .collect();
            let m = &mut self.agents[i];
            losses.push(m.q.q_update(&mut m.q_opt, &batch)?);
        }
        self.stats.low_updates += 1;

        if high {
            let high_idx = &indices[..high_b];
            let w_in_now = self.replay_incoming(high_idx, false, false)?;
            let k_max = self.env.k_max();
            let mut g_out_all = Vec::with_capacity(high_b);
            for (b, &idx) in high_idx.iter().enumerate() {
                let mut g_in = Vec::with_capacity(n);
                let mut lists = Vec::with_capacity(n);
                for i in 0..n {
                    let t = self.replay.get(i, idx);
                    g_in.push(self.agents[i].q.q_input_gradient(i, &t.o, &t.neighbors, &w_in_now[b][i])?);
                    lists.push(t.neighbors.clone());
                }
                let graph = SharingGraph::from_neighborhoods(&lists, k_max)?;
                g_out_all.push(route_gradients(&graph, &g_in)?);
            }
            for i in 0..n {
                let records: Vec<PolicyRecord<'_>> = high_idx
                    .iter()
                    .enumerate()
                    .map(|(b, &idx)| {
                        let t = self.replay.get(i, idx);
                        PolicyRecord {
                            agent: i,
                            o: &t.o,
                            neighbors: &t.neighbors,
                            g_out: &g_out_all[b][i],
                        }
                    })
                    .collect();
                let m = &mut self.agents[i];
                m.phi.policy_update(&mut m.phi_opt, &records)?;
            }
            self.stats.high_updates += 1;
        }

        let tau = self.config.tau;
        for m in &mut self.agents {
            m.q_target.soft_update_from(&m.q, tau)?;
            m.phi_target.soft_update_from(&m.phi, tau)?;
        }
        for (i, l) in losses.iter().enumerate() {
            self.acc.loss[i] += l;
        }
        self.acc.loss_count += 1;
        Ok(Some(losses))
    }

    /// Greedy episode on the evaluation environment: no exploration, no noise.
    pub fn evaluate(&mut self) -> Result<EvalResult> {
        self.evaluate_with_trace(None)
    }

    fn evaluate_with_trace(&mut self, mut trace: Option<&mut Vec<TraceRow>>) -> Result<EvalResult> {
        let n = self.agents.len();
        let mut state = self.eval_env.reset()?;
        let bound = self.eval_env.reward_upper_bound();
        let mut returns = vec![0.0; n];
        let mut steps = 0;
        loop {
            let w = Self::emit(&mut self.agents, self.method, &state, None)?;
            let assignment = WeightAssignment::new(&state.graph, w)?;
            let w_in = assignment.all_incoming(&state.graph);
            let mut actions = Vec::with_capacity(n);
            for (i, m) in self.agents.iter().enumerate() {
                let q = m.q.q_values(i, &state.observations[i], state.graph.neighbors(i), &w_in[i])?;
                actions.push(crate::low_level::argmax(&q));
            }
            let next = self.eval_env.step(&actions)?;
            if let Some(rows) = trace.as_deref_mut() {
                for i in 0..n {
                    rows.push(TraceRow {
                        t: steps,
                        agent: i,
                        obs: state.observations[i].clone(),
                        action: actions[i],
                        reward: next.rewards[i],
                    });
                }
            }
            for (r, x) in returns.iter_mut().zip(&next.rewards) {
                *r += x;
            }
            steps += 1;
            if next.done {
                break;
            }
            state = next;
        }
        let mean_rewards = returns.iter().map(|r| r / steps.max(1) as f64).collect();
        Ok(EvalResult {
            returns,
            mean_rewards,
            steps,
            reward_upper_bound: bound,
        })
    }

    /// Greedy evaluation episode recorded step by step.
    pub fn trace_episode(&mut self) -> Result<Vec<TraceRow>> {
        let mut rows = Vec::new();
        self.evaluate_with_trace(Some(&mut rows))?;
        Ok(rows)
    }

    /// Runs one training episode followed by the configured evaluation and
    /// appends its metrics rows. Returns `false` once the step budget stops
    /// the run.
    pub fn run_episode(&mut self) -> Result<bool> {
        if self.budget_exhausted() {
            return Ok(false);
        }
        self.begin_episode()?;
        loop {
            let done = self.rollout_step()?;
            if self.total_steps % self.config.low_update_every == 0 {
                self.update_step()?;
            }
            if done || self.budget_exhausted() {
                break;
            }
        }
        self.current = None;
        self.finish_episode()?;
        Ok(true)
    }

    /// Closes the current training episode: evaluates and records metrics.
    pub fn finish_episode(&mut self) -> Result<()> {
        let n = self.agents.len();
        let (ret, reward, bound) = if self.config.eval_episodes == 0 {
            let steps = self.acc.steps.max(1) as f64;
            let rewards = self.acc.returns.iter().map(|r| r / steps).collect();
            (self.acc.returns.clone(), rewards, self.env.reward_upper_bound())
        } else {
            let mut ret = vec![0.0; n];
            let mut reward = vec![0.0; n];
            let mut bound_sum = 0.0;
            let mut bound_any = true;
            let k = self.config.eval_episodes as f64;
            for _ in 0..self.config.eval_episodes {
                let e = self.evaluate()?;
                for i in 0..n {
                    ret[i] += e.returns[i] / k;
                    reward[i] += e.mean_rewards[i] / k;
                }
                match e.reward_upper_bound {
                    Some(b) => bound_sum += b / k,
                    None => bound_any = false,
                }
            }
            (ret, reward, bound_any.then_some(bound_sum))
        };
        let emissions = self.acc.emissions.max(1) as f64;
        let loss_n = self.acc.loss_count;
        for i in 0..n {
            self.metrics.rows.push(MetricsRow {
                episode: self.episode,
                step: self.total_steps,
                agent: i,
                ret: ret[i],
                reward: reward[i],
                selfishness: self.acc.selfishness[i] / emissions,
                q_loss: if loss_n == 0 { 0.0 } else { self.acc.loss[i] / loss_n as f64 },
            });
        }
        self.upper_bounds.push(bound);
        self.episode += 1;
        Ok(())
    }

    /// Trains until the episode count or the step budget is reached.
    pub fn train(&mut self) -> Result<TrainOutcome> {
        while (self.episode as usize) < self.config.episodes {
            if !self.run_episode()? {
                break;
            }
        }
        Ok(self.outcome())
    }

    /// Everything recorded so far; usable after a failed run.
    pub fn outcome(&self) -> TrainOutcome {
        TrainOutcome {
            metrics: self.metrics.clone(),
            stats: self.stats.clone(),
            reward_upper_bounds: self.upper_bounds.clone(),
        }
    }

    /// Writes `<dir>/<agent>/{q,phi,q_target,phi_target}.bin`.
    pub fn save_checkpoints(&self, dir: &Path) -> Result<()> {
        for (i, m) in self.agents.iter().enumerate() {
            m.save(&dir.join(i.to_string()))?;
        }
        Ok(())
    }

    /// Replaces every agent's networks from a checkpoint directory.
    pub fn load_checkpoints(&mut self, dir: &Path) -> Result<()> {
        let mut loaded = Vec::with_capacity(self.agents.len());
        for i in 0..self.agents.len() {
            let m = AgentModels::load(&dir.join(i.to_string()), &self.config)?;
            if m.q.obs_dim() != self.env.obs_dim() || m.phi.k_max() != self.env.k_max() {
                return Err(Error::Checkpoint(format!("agent {i} checkpoint does not fit the environment")));
            }
            loaded.push(m);
        }
        self.agents = loaded;
        Ok(())
    }

    /// Whether the run applies exploration noise to the sharing weights.
    pub fn uses_weight_noise(&self) -> bool {
        self.method == Method::Ltos && self.config.noise != NoiseSpec::None
    }
}

/// Trains one seed from scratch.
pub fn train(config: &RunConfig, method: Method, seed: u64) -> Result<TrainOutcome> {
    Trainer::new(config.clone(), method, seed)?.train()
}
