//! Agent communication graph and the directed sharing-edge set derived from it.
//!
//! Every undirected edge `{i, j}` is split into the directed pair `(i, j)` and
//! `(j, i)`, and each agent additionally owns a self-loop `(i, i)`. An agent's
//! neighborhood is itself plus its graph neighbors, sorted by ascending id.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Dense agent index in `[0, n_agents)`.
pub type AgentId = usize;

/// Immutable communication graph with self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharingGraph {
    n_agents: usize,
    k_max: usize,
    /// Unordered pairs stored as `(min, max)`, sorted.
    undirected: Vec<(AgentId, AgentId)>,
    neighborhoods: Vec<Vec<AgentId>>,
}

impl SharingGraph {
    /// Builds a graph from undirected edges, rejecting out-of-range endpoints,
    /// duplicates, explicit self-edges, and degrees above `k_max`.
    pub fn build(n_agents: usize, edges: &[(AgentId, AgentId)], k_max: usize) -> Result<Self> {
        let mut undirected = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n_agents || b >= n_agents {
                return Err(Error::Graph(format!(
                    "edge ({a}, {b}) has an endpoint outside [0, {n_agents})"
                )));
            }
            if a == b {
                return Err(Error::Graph(format!(
                    "explicit self-edge ({a}, {a}); self-loops are implicit"
                )));
            }
            undirected.push((a.min(b), a.max(b)));
        }
        undirected.sort_unstable();
        if let Some(w) = undirected.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Graph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut neighborhoods: Vec<Vec<AgentId>> = (0..n_agents).map(|i| vec![i]).collect();
        for &(a, b) in &undirected {
            neighborhoods[a].push(b);
            neighborhoods[b].push(a);
        }
        for (i, nb) in neighborhoods.iter_mut().enumerate() {
            if nb.len() - 1 > k_max {
                return Err(Error::Graph(format!(
                    "agent {i} has degree {} which exceeds k_max = {k_max}",
                    nb.len() - 1
                )));
            }
            nb.sort_unstable();
        }

        Ok(Self {
            n_agents,
            k_max,
            undirected,
            neighborhoods,
        })
    }

    /// Complete graph on `n_agents` with `k_max = n_agents - 1`.
    pub fn fully_connected(n_agents: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..n_agents {
            for b in a + 1..n_agents {
                edges.push((a, b));
            }
        }
        Self::build(n_agents, &edges, n_agents.saturating_sub(1))
            .expect("complete graph is always valid")
    }

    /// Neighborhood graph where each agent links to its `k` nearest agents by
    /// Euclidean distance (ties to the smaller id), symmetrically closed.
    ///
    /// The closure can push a degree above `k`, so the returned graph uses
    /// `k_max = n - 1`.
    pub fn knn(positions: &[[f64; 2]], k: usize) -> Result<Self> {
        let n = positions.len();
        if k >= n {
            return Err(Error::Graph(format!(
                "k = {k} must be smaller than the number of agents ({n})"
            )));
        }
        let mut edges = Vec::with_capacity(n * k);
        for i in 0..n {
            for j in nearest(positions, i, k) {
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Self::build(n, &edges, n - 1)
    }

    /// Rebuilds a graph from explicit neighborhoods (each including the agent
    /// itself); rejects asymmetric input.
    pub fn from_neighborhoods(lists: &[Vec<AgentId>], k_max: usize) -> Result<Self> {
        let n = lists.len();
        let mut edges = Vec::new();
        for (i, nb) in lists.iter().enumerate() {
            if !nb.contains(&i) {
                return Err(Error::Graph(format!("neighborhood of {i} lacks itself")));
            }
            for &j in nb {
                if j >= n {
                    return Err(Error::Graph(format!("neighbor {j} out of range")));
                }
                if j == i {
                    continue;
                }
                if !lists[j].contains(&i) {
                    return Err(Error::Graph(format!(
                        "asymmetric neighborhoods: {j} in N({i}) but {i} not in N({j})"
                    )));
                }
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        Self::build(n, &edges, k_max)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `N(i)`, self included, ascending.
    pub fn neighbors(&self, i: AgentId) -> &[AgentId] {
        &self.neighborhoods[i]
    }

    pub fn neighborhoods(&self) -> &[Vec<AgentId>] {
        &self.neighborhoods
    }

    pub fn undirected_edges(&self) -> &[(AgentId, AgentId)] {
        &self.undirected
    }

    /// Ordered pairs `(i, j)` with `j in N(i)`, self-loops included.
    pub fn directed_edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.neighborhoods
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().map(move |&j| (i, j)))
    }

    pub fn n_directed_edges(&self) -> usize {
        self.n_agents + 2 * self.undirected.len()
    }

    pub fn has_edge(&self, i: AgentId, j: AgentId) -> bool {
        i < self.n_agents && self.neighborhoods[i].binary_search(&j).is_ok()
    }

    /// Line-oriented text form: `n k_max`, then one `i j` line per undirected edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n_agents, self.k_max);
        for &(a, b) in &self.undirected {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Graph("missing header line".into()))?;
        let (n, k_max) = parse_pair(header)?;
        let edges = lines.map(parse_pair).collect::<Result<Vec<_>>>()?;
        Self::build(n, &edges, k_max)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let parse = |tok: Option<&str>| -> Result<usize> {
        tok.ok_or_else(|| Error::Graph(format!("malformed line `{line}`")))?
            .parse()
            .map_err(|_| Error::Graph(format!("malformed line `{line}`")))
    };
    let a = parse(it.next())?;
    let b = parse(it.next())?;
    if it.next().is_some() {
        return Err(Error::Graph(format!("trailing tokens in `{line}`")));
    }
    Ok((a, b))
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// The `k` agents closest to `i`, ordered by distance then id.
pub fn nearest(positions: &[[f64; 2]], i: AgentId, k: usize) -> Vec<AgentId> {
    let mut others: Vec<(f64, AgentId)> = positions
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, &p)| (dist2(positions[i], p), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(k).map(|(_, j)| j).collect()
}
