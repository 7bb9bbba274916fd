//! Reward sharing over the directed edge set.
//!
//! Agent `i` keeps `w_ii` of its own environment reward and hands `w_ij` to
//! each neighbor `j`. The shaped reward of `i` collects what flows in:
//! `r_i^w = sum_{j in N(i)} w_ji * r_j`.

use crate::error::{Error, Result};
use crate::topology::{AgentId, SharingGraph};

/// Tolerance on the per-agent simplex constraint.
pub const SIMPLEX_TOL: f64 = 1e-6;

/// Small map from neighbor id to a scalar, kept sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborMap {
    entries: Vec<(AgentId, f64)>,
}

impl NeighborMap {
    /// Builds a map, sorting by id. Panics on duplicate keys.
    pub fn from_pairs(mut entries: Vec<(AgentId, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        assert!(
            entries.windows(2).all(|w| w[0].0 != w[1].0),
            "duplicate neighbor key"
        );
        Self { entries }
    }

    /// Map with the given keys (ascending) and values in the same order.
    pub fn zip(keys: &[AgentId], values: &[f64]) -> Self {
        debug_assert_eq!(keys.len(), values.len());
        Self::from_pairs(keys.iter().copied().zip(values.iter().copied()).collect())
    }

    /// `{i: 1.0}` plus zeros for every other key.
    pub fn identity(agent: AgentId, keys: &[AgentId]) -> Self {
        Self::from_pairs(
            keys.iter()
                .map(|&j| (j, if j == agent { 1.0 } else { 0.0 }))
                .collect(),
        )
    }

    pub fn get(&self, key: AgentId) -> Option<f64> {
        self.entries
            .binary_search_by_key(&key, |e| e.0)
            .ok()
            .map(|idx| self.entries[idx].1)
    }

    pub fn keys(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values().sum()
    }

    /// True when the key set equals `keys` (which must be ascending).
    pub fn keyed_by(&self, keys: &[AgentId]) -> bool {
        self.entries.len() == keys.len() && self.keys().zip(keys).all(|(a, &b)| a == b)
    }
}

/// Outgoing sharing weights `w_i^out` for every agent.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightAssignment {
    outgoing: Vec<NeighborMap>,
}

impl WeightAssignment {
    /// Validates keys against `graph` and the simplex constraint per agent.
    pub fn new(graph: &SharingGraph, outgoing: Vec<NeighborMap>) -> Result<Self> {
        if outgoing.len() != graph.n_agents() {
            return Err(Error::Weights(format!(
                "{} weight maps for {} agents",
                outgoing.len(),
                graph.n_agents()
            )));
        }
        for (i, w) in outgoing.iter().enumerate() {
            if !w.keyed_by(graph.neighbors(i)) {
                return Err(Error::Weights(format!(
                    "weights of agent {i} are not keyed by its neighborhood"
                )));
            }
            check_simplex(w).map_err(|msg| Error::Weights(format!("agent {i}: {msg}")))?;
        }
        Ok(Self { outgoing })
    }

    /// Every agent keeps its whole reward.
    pub fn identity(graph: &SharingGraph) -> Self {
        Self {
            outgoing: (0..graph.n_agents())
                .map(|i| NeighborMap::identity(i, graph.neighbors(i)))
                .collect(),
        }
    }

    /// Even split over each neighborhood.
    pub fn uniform(graph: &SharingGraph) -> Self {
        Self {
            outgoing: (0..graph.n_agents())
                .map(|i| {
                    let nb = graph.neighbors(i);
                    let w = 1.0 / nb.len() as f64;
                    NeighborMap::zip(nb, &vec![w; nb.len()])
                })
                .collect(),
        }
    }

    pub fn outgoing(&self, i: AgentId) -> &NeighborMap {
        &self.outgoing[i]
    }

    pub fn all_outgoing(&self) -> &[NeighborMap] {
        &self.outgoing
    }

    /// `w_i^in = {j: w_ji}` keyed by `N(i)`.
    pub fn incoming(&self, graph: &SharingGraph, i: AgentId) -> NeighborMap {
        NeighborMap::from_pairs(
            graph
                .neighbors(i)
                .iter()
                .map(|&j| (j, self.outgoing[j].get(i).unwrap_or(0.0)))
                .collect(),
        )
    }

    pub fn all_incoming(&self, graph: &SharingGraph) -> Vec<NeighborMap> {
        (0..graph.n_agents())
            .map(|i| self.incoming(graph, i))
            .collect()
    }
}

/// Checks that `w` lies on the probability simplex within [`SIMPLEX_TOL`].
pub fn check_simplex(w: &NeighborMap) -> std::result::Result<(), String> {
    if let Some((j, v)) = w
        .iter()
        .find(|&(_, v)| !v.is_finite() || !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&v))
    {
        return Err(format!("weight toward {j} is {v}, outside [0, 1]"));
    }
    let s = w.sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(format!("weights sum to {s}"));
    }
    Ok(())
}

/// Shaped rewards `r_i^w = sum_{j in N(i)} w_ji * r_j`.
pub fn share_rewards(graph: &SharingGraph, w: &WeightAssignment, raw: &[f64]) -> Result<Vec<f64>> {
    crate::error::dim("raw rewards", graph.n_agents(), raw.len())?;
    if w.outgoing.len() != graph.n_agents() {
        return Err(Error::Weights("weight set does not match graph size".into()));
    }
    (0..graph.n_agents())
        .map(|i| {
            graph.neighbors(i).iter().try_fold(0.0, |acc, &j| {
                let wji = w.outgoing[j].get(i).ok_or_else(|| {
                    Error::Weights(format!("missing weight on edge ({j}, {i})"))
                })?;
                Ok(acc + wji * raw[j])
            })
        })
        .collect()
}

/// Self-loop weight `w_ii` per agent.
pub fn selfishness(w: &WeightAssignment) -> Vec<f64> {
    w.outgoing
        .iter()
        .enumerate()
        .map(|(i, m)| m.get(i).unwrap_or(0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line3() -> (SharingGraph, WeightAssignment) {
        let g = SharingGraph::build(3, &[(0, 1), (1, 2)], 3).unwrap();
        let w = WeightAssignment::new(
            &g,
            vec![
                NeighborMap::zip(&[0, 1], &[0.7, 0.3]),
                NeighborMap::zip(&[0, 1, 2], &[0.2, 0.5, 0.3]),
                NeighborMap::zip(&[1, 2], &[0.4, 0.6]),
            ],
        )
        .unwrap();
        (g, w)
    }

    #[test]
    fn identity_sharing_is_noop() {
        let g = SharingGraph::fully_connected(3);
        let raw = [1.0, -2.0, 0.5];
        let out = share_rewards(&g, &WeightAssignment::identity(&g), &raw).unwrap();
        assert_eq!(out, raw);
        assert_eq!(selfishness(&WeightAssignment::identity(&g)), vec![1.0; 3]);
    }

    #[test]
    fn symmetric_split() {
        let g = SharingGraph::fully_connected(2);
        let out = share_rewards(&g, &WeightAssignment::uniform(&g), &[1.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn three_agent_line() {
        let (g, w) = line3();
        let out = share_rewards(&g, &w, &[1.0, 2.0, -1.0]).unwrap();
        let expected = [1.1, 0.9, 0.0];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{out:?}");
        }
        assert!((out.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert_eq!(selfishness(&w), vec![0.7, 0.5, 0.6]);
        assert_eq!(w.incoming(&g, 1), NeighborMap::zip(&[0, 1, 2], &[0.3, 0.5, 0.4]));
    }

    #[test]
    fn uniform_selfishness() {
        let g = SharingGraph::fully_connected(4);
        assert_eq!(selfishness(&WeightAssignment::uniform(&g)), vec![0.25; 4]);
    }

    #[test]
    fn rejects_invalid_weights() {
        let g = SharingGraph::fully_connected(2);
        let off_simplex = vec![
            NeighborMap::zip(&[0, 1], &[0.6, 0.6]),
            NeighborMap::zip(&[0, 1], &[0.5, 0.5]),
        ];
        assert!(WeightAssignment::new(&g, off_simplex).is_err());
        let wrong_keys = vec![
            NeighborMap::zip(&[0], &[1.0]),
            NeighborMap::zip(&[0, 1], &[0.5, 0.5]),
        ];
        assert!(WeightAssignment::new(&g, wrong_keys).is_err());
        let negative = vec![
            NeighborMap::zip(&[0, 1], &[1.5, -0.5]),
            NeighborMap::zip(&[0, 1], &[0.5, 0.5]),
        ];
        assert!(WeightAssignment::new(&g, negative).is_err());
        // weights built for a different graph
        let (_, w3) = line3();
        assert!(share_rewards(&g, &w3, &[0.0, 0.0]).is_err());
    }

    pub(crate) fn random_instance() -> impl Strategy<Value = (SharingGraph, WeightAssignment, Vec<f64>)> {
        (1usize..10)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec(proptest::bool::ANY, n * n),
                    proptest::collection::vec(0.0f64..1.0, n * n),
                    proptest::collection::vec(-5.0f64..5.0, n),
                )
            })
            .prop_map(|(n, mask, raw_w, r)| {
                let mut edges = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        if mask[a * n + b] {
                            edges.push((a, b));
                        }
                    }
                }
                let g = SharingGraph::build(n, &edges, n).unwrap();
                let maps = (0..n)
                    .map(|i| {
                        let nb = g.neighbors(i);
                        let vals: Vec<f64> = nb.iter().map(|&j| raw_w[i * n + j] + 1e-3).collect();
                        let s: f64 = vals.iter().sum();
                        NeighborMap::zip(nb, &vals.iter().map(|v| v / s).collect::<Vec<_>>())
                    })
                    .collect();
                let w = WeightAssignment::new(&g, maps).unwrap();
                (g, w, r)
            })
    }

    proptest! {
        #[test]
        fn conserves_total_reward((g, w, r) in random_instance()) {
            let out = share_rewards(&g, &w, &r).unwrap();
            let total: f64 = r.iter().sum();
            let shaped: f64 = out.iter().sum();
            prop_assert!((total - shaped).abs() <= 1e-9 * total.abs().max(1.0));
        }

        #[test]
        fn linear_in_rewards((g, w, r) in random_instance(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let r2: Vec<f64> = r.iter().rev().copied().collect();
            let mix: Vec<f64> = r.iter().zip(&r2).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = share_rewards(&g, &w, &mix).unwrap();
            let s1 = share_rewards(&g, &w, &r).unwrap();
            let s2 = share_rewards(&g, &w, &r2).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - (alpha * s1[i] + beta * s2[i])).abs() < 1e-9);
            }
        }

        #[test]
        fn perturbation_stays_local((g, w, r) in random_instance(), pick in 0usize..100) {
            let j = pick % g.n_agents();
            let mut r2 = r.clone();
            r2[j] += 1.0;
            let a = share_rewards(&g, &w, &r).unwrap();
            let b = share_rewards(&g, &w, &r2).unwrap();
            for i in 0..g.n_agents() {
                if !g.neighbors(i).contains(&j) {
                    prop_assert_eq!(a[i], b[i]);
                }
            }
        }
    }
}
