use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::low_level::Transition;

/// Per-agent ring buffers filled in lockstep.
///
/// Every push appends one record per agent with a shared timestamp, so a
/// single index drawn from the unified generator addresses the same timestep
/// in every agent's buffer.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    agents: Vec<VecDeque<Transition>>,
}

impl ReplayBuffer {
    pub fn new(n_agents: usize, capacity: usize) -> Self {
        Self {
            capacity,
            agents: (0..n_agents)
                .map(|_| VecDeque::with_capacity(capacity.min(1 << 16)))
                .collect(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn len(&self) -> usize {
        self.agents.first().map_or(0, VecDeque::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends one record per agent; evicts the oldest timestep when full.
    pub fn push(&mut self, records: Vec<Transition>) -> Result<()> {
        crate::error::dim("replay records", self.agents.len(), records.len())?;
        let ts = records[0].timestamp;
        for (i, r) in records.iter().enumerate() {
            if r.agent != i || r.timestamp != ts {
                return Err(Error::Replay(format!(
                    "record {i} has agent {} / timestamp {} (expected {i} / {ts})",
                    r.agent, r.timestamp
                )));
            }
        }
        for (buf, r) in self.agents.iter_mut().zip(records) {
            if buf.len() == self.capacity {
                buf.pop_front();
            }
            buf.push_back(r);
        }
        Ok(())
    }

    /// Agent `i`'s record at position `idx`.
    pub fn get(&self, agent: usize, idx: usize) -> &Transition {
        &self.agents[agent][idx]
    }

    /// One index set, shared by all agents. Draws without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n == 0 || self.len() < n {
            return Err(Error::Replay(format!(
                "cannot draw {n} records from a buffer of {}",
                self.len()
            )));
        }
        Ok(sample(rng, self.len(), n).into_vec())
    }

    /// Timestamps behind `indices`, per agent.
    pub fn timestamps(&self, indices: &[usize]) -> Vec<Vec<u64>> {
        self.agents
            .iter()
            .map(|buf| indices.iter().map(|&i| buf[i].timestamp).collect())
            .collect()
    }
}
