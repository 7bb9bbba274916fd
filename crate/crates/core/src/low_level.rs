//! Per-agent action-value learner conditioned on incoming sharing weights.
//!
//! The network encodes the agent's observation with one MLP and every
//! neighborhood slot `(w_ji, [j == i])` with a shared MLP. Slot encodings are
//! mean-pooled, so the output does not depend on neighbor order, and the head
//! maps `[self ++ pooled]` to one value per action. The same network is the
//! critic of the high-level policy: its gradient w.r.t. `w_ji` is what agent
//! `i` reports back to neighbor `j`.

use std::io::{Read, Write};

use rand::Rng;

use crate::error::{dim, Error, Result};
use crate::nn::{Activation, Gradients, Init, Mlp, Optimizer, OptimizerKind, Trace};
use crate::sharing::NeighborMap;
use crate::topology::AgentId;

/// Features per neighborhood slot: incoming weight and a self indicator.
pub const SLOT_FEATURES: usize = 2;

/// One agent's replay record.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub agent: AgentId,
    pub timestamp: u64,
    pub o: Vec<f64>,
    /// Incoming weights used when acting, keyed by `neighbors`.
    pub w_in: NeighborMap,
    pub a: usize,
    pub r_w: f64,
    pub o_next: Vec<f64>,
    pub neighbors: Vec<AgentId>,
    pub neighbors_next: Vec<AgentId>,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    pub self_encoder: Mlp,
    pub neighbor_encoder: Mlp,
    pub head: Mlp,
}

/// Gradients for the three parts of a [`QNetwork`].
#[derive(Clone, Debug)]
pub struct QGradients {
    pub self_encoder: Gradients,
    pub neighbor_encoder: Gradients,
    pub head: Gradients,
}

impl QGradients {
    pub fn zeros_like(net: &QNetwork) -> Self {
        Self {
            self_encoder: Gradients::zeros_like(&net.self_encoder),
            neighbor_encoder: Gradients::zeros_like(&net.neighbor_encoder),
            head: Gradients::zeros_like(&net.head),
        }
    }

    fn scale(&mut self, k: f64) {
        self.self_encoder.scale(k);
        self.neighbor_encoder.scale(k);
        self.head.scale(k);
    }

    pub fn is_finite(&self) -> bool {
        self.self_encoder.is_finite() && self.neighbor_encoder.is_finite() && self.head.is_finite()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.self_encoder.flat();
        v.extend(self.neighbor_encoder.flat());
        v.extend(self.head.flat());
        v
    }
}

/// Intermediate values kept for a backward pass.
pub struct QForward {
    self_trace: Trace,
    slot_traces: Vec<Trace>,
    head_trace: Trace,
    slots: Vec<AgentId>,
}

impl QForward {
    pub fn values(&self) -> &[f64] {
        self.head_trace.output()
    }
}

/// Optimizer state for all parts of a [`QNetwork`].
#[derive(Clone, Debug)]
pub struct QOptimizer {
    self_encoder: Optimizer,
    neighbor_encoder: Optimizer,
    head: Optimizer,
}

impl QOptimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &QNetwork) -> Self {
        Self {
            self_encoder: Optimizer::new(kind, lr, &net.self_encoder),
            neighbor_encoder: Optimizer::new(kind, lr, &net.neighbor_encoder),
            head: Optimizer::new(kind, lr, &net.head),
        }
    }

    pub fn step(&mut self, net: &mut QNetwork, grads: &QGradients) -> Result<()> {
        self.self_encoder.step(&mut net.self_encoder, &grads.self_encoder)?;
        self.neighbor_encoder
            .step(&mut net.neighbor_encoder, &grads.neighbor_encoder)?;
        self.head.step(&mut net.head, &grads.head)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Exploration rate `max(end, start * decay^n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decay: f64,
    pub end: f64,
}

impl EpsilonSchedule {
    pub fn at(&self, n: u64) -> f64 {
        let v = self.start * self.decay.powf(n as f64);
        if self.decay <= 1.0 {
            v.max(self.end)
        } else {
            v.min(self.end)
        }
        .clamp(0.0, 1.0)
    }
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        n_actions: usize,
        hidden: [usize; 2],
        init: Init,
        rng: &mut R,
    ) -> Self {
        let [h1, h2] = hidden;
        Self {
            self_encoder: Mlp::new(&[obs_dim, h1, h2], Activation::Relu, Activation::Relu, init, rng),
            neighbor_encoder: Mlp::new(
                &[SLOT_FEATURES, h1, h2],
                Activation::Relu,
                Activation::Relu,
                init,
                rng,
            ),
            head: Mlp::new(&[2 * h2, n_actions], Activation::Identity, Activation::Identity, init, rng),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.head.output_dim()
    }

    pub fn obs_dim(&self) -> usize {
        self.self_encoder.input_dim()
    }

    pub fn forward(
        &self,
        agent: AgentId,
        o: &[f64],
        neighbors: &[AgentId],
        w_in: &NeighborMap,
    ) -> Result<QForward> {
        if neighbors.is_empty() {
            return Err(Error::Weights("empty neighborhood".into()));
        }
        if !w_in.keyed_by(neighbors) {
            return Err(Error::Weights(format!(
                "incoming weights of agent {agent} are not keyed by its neighborhood"
            )));
        }
        let self_trace = self.self_encoder.forward_trace(o)?;
        let h = self.neighbor_encoder.output_dim();
        let mut pooled = vec![0.0; h];
        let mut slot_traces = Vec::with_capacity(neighbors.len());
        for (j, w) in w_in.iter() {
            let flag = if j == agent { 1.0 } else { 0.0 };
            let tr = self.neighbor_encoder.forward_trace(&[w, flag])?;
            for (p, v) in pooled.iter_mut().zip(tr.output()) {
                *p += v;
            }
            slot_traces.push(tr);
        }
        let inv = 1.0 / neighbors.len() as f64;
        pooled.iter_mut().for_each(|p| *p *= inv);
        let mut head_in = self_trace.output().to_vec();
        head_in.extend_from_slice(&pooled);
        let head_trace = self.head.forward_trace(&head_in)?;
        Ok(QForward {
            self_trace,
            slot_traces,
            head_trace,
            slots: neighbors.to_vec(),
        })
    }

    /// Action values `q(o, . ; w_in)`.
    pub fn q_values(
        &self,
        agent: AgentId,
        o: &[f64],
        neighbors: &[AgentId],
        w_in: &NeighborMap,
    ) -> Result<Vec<f64>> {
        Ok(self.forward(agent, o, neighbors, w_in)?.values().to_vec())
    }

    /// Accumulates parameter gradients of `<upstream, q>` into `grads` and
    /// returns the gradient w.r.t. each incoming weight, keyed by neighbor.
    pub fn backward(
        &self,
        fwd: &QForward,
        upstream: &[f64],
        grads: &mut QGradients,
    ) -> Result<NeighborMap> {
        dim("q upstream", self.n_actions(), upstream.len())?;
        let d_head_in = self.head.backward_into(&fwd.head_trace, upstream, &mut grads.head)?;
        let h = self.self_encoder.output_dim();
        self.self_encoder
            .backward_into(&fwd.self_trace, &d_head_in[..h], &mut grads.self_encoder)?;
        let inv = 1.0 / fwd.slots.len() as f64;
        let d_slot: Vec<f64> = d_head_in[h..].iter().map(|v| v * inv).collect();
        let mut dw = Vec::with_capacity(fwd.slots.len());
        for tr in &fwd.slot_traces {
            let dx = self
                .neighbor_encoder
                .backward_into(tr, &d_slot, &mut grads.neighbor_encoder)?;
            dw.push(dx[0]);
        }
        Ok(NeighborMap::zip(&fwd.slots, &dw))
    }

    /// `d max_a q(o, a; w_in) / d w_ji`, keyed by `j`.
    pub fn q_input_gradient(
        &self,
        agent: AgentId,
        o: &[f64],
        neighbors: &[AgentId],
        w_in: &NeighborMap,
    ) -> Result<NeighborMap> {
        let fwd = self.forward(agent, o, neighbors, w_in)?;
        let mut upstream = vec![0.0; self.n_actions()];
        upstream[argmax(fwd.values())] = 1.0;
        let mut scratch = QGradients::zeros_like(self);
        self.backward(&fwd, &upstream, &mut scratch)
    }

    /// Epsilon-greedy action.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        agent: AgentId,
        o: &[f64],
        neighbors: &[AgentId],
        w_in: &NeighborMap,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<usize> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Param(format!("epsilon = {epsilon} outside [0, 1]")));
        }
        if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            return Ok(rng.random_range(0..self.n_actions()));
        }
        Ok(argmax(&self.q_values(agent, o, neighbors, w_in)?))
    }

    /// Bootstrapped target `r_w + gamma * max_a q'(o', a; w_in')`, or `r_w` at
    /// episode end. `w_in_next` must come from the target high-level policies.
    pub fn td_target(&self, t: &Transition, gamma: f64, w_in_next: &NeighborMap) -> Result<f64> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Param(format!("gamma = {gamma} outside [0, 1]")));
        }
        if t.done || gamma == 0.0 {
            return Ok(t.r_w);
        }
        let q = self.q_values(t.agent, &t.o_next, &t.neighbors_next, w_in_next)?;
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(t.r_w + gamma * best)
    }

    /// Mean squared TD error over `batch` and its parameter gradient, using
    /// the weights stored in each record.
    pub fn td_loss_and_grad(&self, batch: &[(&Transition, f64)]) -> Result<(f64, QGradients)> {
        if batch.is_empty() {
            return Err(Error::Replay("empty minibatch".into()));
        }
        let mut grads = QGradients::zeros_like(self);
        let mut loss = 0.0;
        let mut upstream = vec![0.0; self.n_actions()];
        for &(t, y) in batch {
            if t.a >= self.n_actions() {
                return Err(Error::Param(format!("stored action {} out of range", t.a)));
            }
            let fwd = self.forward(t.agent, &t.o, &t.neighbors, &t.w_in)?;
            let err = y - fwd.values()[t.a];
            loss += err * err;
            upstream.iter_mut().for_each(|u| *u = 0.0);
            upstream[t.a] = -2.0 * err;
            self.backward(&fwd, &upstream, &mut grads)?;
        }
        let inv = 1.0 / batch.len() as f64;
        grads.scale(inv);
        Ok((loss * inv, grads))
    }

    /// One descent step on the mean squared TD error; returns the pre-step loss.
    pub fn q_update(&mut self, opt: &mut QOptimizer, batch: &[(&Transition, f64)]) -> Result<f64> {
        let (loss, grads) = self.td_loss_and_grad(batch)?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(Error::NonFinite(format!("TD loss {loss}")));
        }
        opt.step(self, &grads)?;
        Ok(loss)
    }

    pub fn soft_update_from(&mut self, online: &QNetwork, tau: f64) -> Result<()> {
        crate::nn::soft_update(&mut self.self_encoder, &online.self_encoder, tau)?;
        crate::nn::soft_update(&mut self.neighbor_encoder, &online.neighbor_encoder, tau)?;
        crate::nn::soft_update(&mut self.head, &online.head, tau)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        self.self_encoder.write_to(out)?;
        self.neighbor_encoder.write_to(out)?;
        self.head.write_to(out)
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        Ok(Self {
            self_encoder: Mlp::read_from(input)?,
            neighbor_encoder: Mlp::read_from(input)?,
            head: Mlp::read_from(input)?,
        })
    }

    pub fn params(&self) -> Vec<f64> {
        self.self_encoder
            .params()
            .chain(self.neighbor_encoder.params())
            .chain(self.head.params())
            .copied()
            .collect()
    }
}
