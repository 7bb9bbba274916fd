//! Per-agent deterministic sharing policy `o_i -> w_i^out`.
//!
//! The network emits one logit per slot. Slot 0 is the agent itself and the
//! remaining slots hold its neighbors in ascending id order; slots beyond the
//! current neighborhood are masked out of the normalized exponential, so
//! padded slots always receive exactly zero weight.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::nn::{Activation, Gradients, Init, Mlp, Optimizer};
use crate::sharing::NeighborMap;
use crate::topology::{AgentId, SharingGraph};

/// Exploration noise on the logits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseSpec {
    None,
    /// With probability `epsilon`, add `N(0, sigma^2)` to every active logit.
    EpsilonGaussian { epsilon: f64, sigma: f64 },
    /// Ornstein-Uhlenbeck process `x <- x - theta x + sigma N(0, 1)`.
    OrnsteinUhlenbeck { sigma: f64, theta: f64 },
}

#[derive(Clone, Debug)]
pub struct NoiseProcess {
    spec: NoiseSpec,
    state: Vec<f64>,
}

impl NoiseProcess {
    pub fn new(spec: NoiseSpec, dim: usize) -> Self {
        Self {
            spec,
            state: vec![0.0; dim],
        }
    }

    pub fn spec(&self) -> NoiseSpec {
        self.spec
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Clears the OU state; called at episode boundaries.
    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    /// Adds noise to the first `active` logits. `scale` multiplies sigma.
    pub fn perturb<R: Rng + ?Sized>(
        &mut self,
        logits: &mut [f64],
        active: usize,
        scale: f64,
        rng: &mut R,
    ) {
        match self.spec {
            NoiseSpec::None => {}
            NoiseSpec::EpsilonGaussian { epsilon, sigma } => {
                let sigma = sigma * scale;
                if epsilon > 0.0 && sigma > 0.0 && rng.random::<f64>() < epsilon {
                    for z in &mut logits[..active] {
                        let n: f64 = rng.sample(StandardNormal);
                        *z += sigma * n;
                    }
                }
            }
            NoiseSpec::OrnsteinUhlenbeck { sigma, theta } => {
                let sigma = sigma * scale;
                if sigma > 0.0 {
                    for x in &mut self.state {
                        let n: f64 = rng.sample(StandardNormal);
                        *x += -theta * *x + sigma * n;
                    }
                }
                for (z, x) in logits[..active].iter_mut().zip(&self.state) {
                    *z += x;
                }
            }
        }
    }
}

/// Gradient signal for one replayed observation.
#[derive(Clone, Copy, Debug)]
pub struct PolicyRecord<'a> {
    pub agent: AgentId,
    pub o: &'a [f64],
    pub neighbors: &'a [AgentId],
    /// `d objective / d w_ij`, keyed by `j`.
    pub g_out: &'a NeighborMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HighPolicy {
    pub net: Mlp,
    k_max: usize,
}

/// Slot order for agent `i`: itself first, then other neighbors ascending.
pub fn slot_layout(agent: AgentId, neighbors: &[AgentId]) -> Vec<AgentId> {
    std::iter::once(agent)
        .chain(neighbors.iter().copied().filter(|&j| j != agent))
        .collect()
}

fn masked_softmax(logits: &[f64], active: usize) -> Vec<f64> {
    let mut w = logits[..active].to_vec();
    crate::nn::softmax_in_place(&mut w);
    w
}

impl HighPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        k_max: usize,
        hidden: [usize; 2],
        init: Init,
        rng: &mut R,
    ) -> Self {
        Self {
            net: Mlp::new(
                &[obs_dim, hidden[0], hidden[1], 1 + k_max],
                Activation::Relu,
                Activation::Identity,
                init,
                rng,
            ),
            k_max,
        }
    }

    pub fn from_net(net: Mlp) -> Result<Self> {
        let out = net.output_dim();
        if out == 0 {
            return Err(Error::Param("policy network has no outputs".into()));
        }
        Ok(Self { net, k_max: out - 1 })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Sets the output layer so that, for any input, the emitted weights are
    /// `s0` for the agent itself and `(1 - s0) / k_active` for each neighbor
    /// when exactly `k_active` neighbors are present. The output weights are
    /// zeroed so that this holds regardless of the hidden activations.
    pub fn init_selfishness(&mut self, s0: f64, k_active: usize) -> Result<()> {
        if !(s0 > 0.0 && s0 < 1.0) {
            return Err(Error::Param(format!("initial selfishness {s0} outside (0, 1)")));
        }
        if k_active == 0 {
            return Err(Error::Param("selfishness initializer needs k_active >= 1".into()));
        }
        let last = self.net.layers_mut().last_mut().expect("nonempty");
        last.weights.iter_mut().for_each(|w| *w = 0.0);
        last.bias.iter_mut().for_each(|b| *b = 0.0);
        last.bias[0] = (s0 * k_active as f64 / (1.0 - s0)).ln();
        Ok(())
    }

    fn check_neighbors(&self, agent: AgentId, neighbors: &[AgentId]) -> Result<()> {
        if !neighbors.contains(&agent) {
            return Err(Error::Graph(format!("neighborhood of {agent} lacks itself")));
        }
        if neighbors.len() > self.k_max + 1 {
            return Err(Error::Graph(format!(
                "{} neighbors exceed the policy's {} slots",
                neighbors.len(),
                self.k_max + 1
            )));
        }
        Ok(())
    }

    /// Logits over all `1 + k_max` slots.
    pub fn logits(&self, o: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(o)
    }

    /// Outgoing weights keyed by `neighbors`, optionally perturbed by `noise`
    /// (applied to the logits, before normalization).
    pub fn emit_weights<R: Rng + ?Sized>(
        &self,
        agent: AgentId,
        o: &[f64],
        neighbors: &[AgentId],
        noise: Option<(&mut NoiseProcess, f64)>,
        rng: &mut R,
    ) -> Result<NeighborMap> {
        self.check_neighbors(agent, neighbors)?;
        let mut logits = self.logits(o)?;
        let active = neighbors.len();
        if let Some((process, scale)) = noise {
            process.perturb(&mut logits, active, scale, rng);
        }
        let w = masked_softmax(&logits, active);
        Ok(NeighborMap::zip(&slot_layout(agent, neighbors), &w))
    }

    /// Noise-free emission.
    pub fn weights(&self, agent: AgentId, o: &[f64], neighbors: &[AgentId]) -> Result<NeighborMap> {
        self.check_neighbors(agent, neighbors)?;
        let w = masked_softmax(&self.logits(o)?, neighbors.len());
        Ok(NeighborMap::zip(&slot_layout(agent, neighbors), &w))
    }

    /// Batch-mean gradient of `<g_out, w(theta)>` w.r.t. the parameters.
    pub fn objective_gradient(&self, records: &[PolicyRecord<'_>]) -> Result<Gradients> {
        if records.is_empty() {
            return Err(Error::Replay("empty policy minibatch".into()));
        }
        let mut grads = Gradients::zeros_like(&self.net);
        for r in records {
            self.check_neighbors(r.agent, r.neighbors)?;
            if !r.g_out.keyed_by(r.neighbors) {
                return Err(Error::Weights(format!(
                    "g_out of agent {} is not keyed by its neighborhood",
                    r.agent
                )));
            }
            let trace = self.net.forward_trace(r.o)?;
            let active = r.neighbors.len();
            let w = masked_softmax(trace.output(), active);
            let slots = slot_layout(r.agent, r.neighbors);
            let g: Vec<f64> = slots
                .iter()
                .map(|&j| r.g_out.get(j).expect("keys checked"))
                .collect();
            let inner: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
            let mut upstream = vec![0.0; self.k_max + 1];
            for k in 0..active {
                upstream[k] = w[k] * (g[k] - inner);
            }
            self.net.backward_into(&trace, &upstream, &mut grads)?;
        }
        grads.scale(1.0 / records.len() as f64);
        Ok(grads)
    }

    /// One ascent step along the batch-mean policy gradient.
    pub fn policy_update(&mut self, opt: &mut Optimizer, records: &[PolicyRecord<'_>]) -> Result<()> {
        let mut grads = self.objective_gradient(records)?;
        if !grads.is_finite() {
            return Err(Error::NonFinite("high-level policy gradient".into()));
        }
        grads.scale(-1.0);
        opt.step(&mut self.net, &grads)
    }

    pub fn soft_update_from(&mut self, online: &HighPolicy, tau: f64) -> Result<()> {
        crate::nn::soft_update(&mut self.net, &online.net, tau)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        self.net.write_to(out)
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        Self::from_net(Mlp::read_from(input)?)
    }
}

/// Delivers each agent's critic sensitivities to the agents that control the
/// corresponding weights: `g_out[i][j] = g_in[j][i]` for every `(i, j)` in the
/// directed edge set.
pub fn route_gradients(graph: &SharingGraph, g_in: &[NeighborMap]) -> Result<Vec<NeighborMap>> {
    crate::error::dim("g_in maps", graph.n_agents(), g_in.len())?;
    for (i, g) in g_in.iter().enumerate() {
        if !g.keyed_by(graph.neighbors(i)) {
            return Err(Error::Weights(format!(
                "g_in of agent {i} is not keyed by its neighborhood"
            )));
        }
    }
    Ok((0..graph.n_agents())
        .map(|i| {
            NeighborMap::from_pairs(
                graph
                    .neighbors(i)
                    .iter()
                    .map(|&j| (j, g_in[j].get(i).expect("symmetric graph")))
                    .collect(),
            )
        })
        .collect())
}
