//! Python bindings for `ltos-core`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ltos_core::env::{MatrixGame, PrisonerConfig};
use ltos_core::harness::{self, RunMethod};
use ltos_core::oracle;
use ltos_core::trainer::{self, RunConfig};
use ltos_core::{NeighborMap, WeightAssignment};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: ltos_core::Error) -> PyErr {
    match e {
        ltos_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Undirected sharing graph with self-loops.
#[pyclass(name = "SharingGraph", module = "ltos_net", frozen)]
struct PySharingGraph {
    inner: ltos_core::SharingGraph,
}

#[pymethods]
impl PySharingGraph {
    #[new]
    #[pyo3(signature = (n_agents, edges, k_max=None))]
    fn new(n_agents: usize, edges: Vec<(usize, usize)>, k_max: Option<usize>) -> PyResult<Self> {
        let k_max = k_max.unwrap_or(n_agents.saturating_sub(1));
        ltos_core::SharingGraph::build(n_agents, &edges, k_max)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn fully_connected(n_agents: usize) -> Self {
        Self {
            inner: ltos_core::SharingGraph::fully_connected(n_agents),
        }
    }

    /// Symmetrized k-nearest-neighbor graph over 2-D positions.
    #[staticmethod]
    fn knn(positions: Vec<[f64; 2]>, k: usize) -> PyResult<Self> {
        ltos_core::SharingGraph::knn(&positions, k)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        ltos_core::SharingGraph::from_text(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }

    #[getter]
    fn k_max(&self) -> usize {
        self.inner.k_max()
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.inner.n_agents() {
            return Err(PyValueError::new_err(format!("agent {i} out of range")));
        }
        Ok(self.inner.neighbors(i).to_vec())
    }

    fn has_edge(&self, i: usize, j: usize) -> bool {
        self.inner.has_edge(i, j)
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.undirected_edges().to_vec()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "SharingGraph(n_agents={}, edges={})",
            self.inner.n_agents(),
            self.inner.undirected_edges().len()
        )
    }
}

fn assignment(
    graph: &PySharingGraph,
    outgoing: Vec<BTreeMap<usize, f64>>,
) -> PyResult<WeightAssignment> {
    let out = outgoing
        .into_iter()
        .map(|m| NeighborMap::from_pairs(m.into_iter().collect()))
        .collect();
    WeightAssignment::new(&graph.inner, out).map_err(err)
}

/// Shaped rewards `r_i = sum_j w_ji r_j` given each agent's outgoing weights.
#[pyfunction]
fn share_rewards(
    graph: &PySharingGraph,
    outgoing: Vec<BTreeMap<usize, f64>>,
    rewards: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let w = assignment(graph, outgoing)?;
    ltos_core::share_rewards(&graph.inner, &w, &rewards).map_err(err)
}

/// Self-loop weight of every agent.
#[pyfunction]
fn selfishness(graph: &PySharingGraph, outgoing: Vec<BTreeMap<usize, f64>>) -> PyResult<Vec<f64>> {
    Ok(ltos_core::selfishness(&assignment(graph, outgoing)?))
}

/// Exact optimum of the two-agent corridor.
#[pyfunction]
#[pyo3(signature = (end_offset=4, step_cost=0.01, horizon=50))]
fn prisoner_optimum(end_offset: i32, step_cost: f64, horizon: usize) -> PyResult<BTreeMap<String, f64>> {
    let config = PrisonerConfig {
        end_offset,
        step_cost,
        horizon,
    };
    let vi = oracle::prisoner_optimum(&config).map_err(err)?;
    Ok(BTreeMap::from([
        ("optimal_return".into(), vi.optimal_average_return),
        ("n_states".into(), vi.n_states as f64),
        ("iterations".into(), vi.iterations as f64),
    ]))
}

/// `payoffs[a][b] = [row, column]` of the corridor's cooperate/defect game.
#[pyfunction]
#[pyo3(signature = (end_offset=4, step_cost=0.01, horizon=50))]
fn prisoner_payoff_matrix(end_offset: i32, step_cost: f64, horizon: usize) -> PyResult<[[[f64; 2]; 2]; 2]> {
    let config = PrisonerConfig {
        end_offset,
        step_cost,
        horizon,
    };
    Ok(oracle::prisoner_payoff_matrix(&config).map_err(err)?.payoffs)
}

/// Pure Nash equilibria, welfare-optimal profiles and the dilemma flag.
#[pyfunction]
fn analyze_matrix_game(
    payoffs: [[[f64; 2]; 2]; 2],
) -> PyResult<(Vec<(usize, usize)>, Vec<(usize, usize)>, bool)> {
    let game = MatrixGame::new(payoffs).map_err(err)?;
    let a = oracle::analyze_matrix_game(&game);
    Ok((a.nash, a.welfare_optimal, a.dilemma))
}

/// Training configuration in the `key=value` file format.
#[pyclass(name = "RunConfig", module = "ltos_net")]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    /// Defaults for `env` ("prisoner", "foraging" or "matrix").
    #[new]
    #[pyo3(signature = (env="prisoner"))]
    fn new(env: &str) -> PyResult<Self> {
        RunConfig::for_env_name(env)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        harness::parse_config_str(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        harness::parse_config(&path)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn to_text(&self) -> String {
        harness::write_config(&self.inner)
    }

    #[getter]
    fn env(&self) -> &'static str {
        self.inner.env.name()
    }

    #[getter]
    fn episodes(&self) -> usize {
        self.inner.episodes
    }

    #[setter]
    fn set_episodes(&mut self, n: usize) {
        self.inner.episodes = n;
    }

    #[getter]
    fn max_steps(&self) -> Option<u64> {
        self.inner.max_steps
    }

    #[setter]
    fn set_max_steps(&mut self, n: Option<u64>) {
        self.inner.max_steps = n;
    }

    #[getter]
    fn selfishness(&self) -> f64 {
        self.inner.selfishness
    }

    #[setter]
    fn set_selfishness(&mut self, s0: f64) -> PyResult<()> {
        if !(s0 > 0.0 && s0 < 1.0) {
            return Err(PyValueError::new_err(format!("selfishness {s0} outside (0, 1)")));
        }
        self.inner.selfishness = s0;
        Ok(())
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.seeds.clone()
    }

    #[setter]
    fn set_seeds(&mut self, seeds: Vec<u64>) {
        self.inner.seeds = seeds;
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(env={:?}, episodes={}, seeds={:?})",
            self.inner.env.name(),
            self.inner.episodes,
            self.inner.seeds
        )
    }
}

/// Result of one training run.
#[pyclass(name = "TrainResult", module = "ltos_net", frozen, get_all)]
struct PyTrainResult {
    average_returns: Vec<f64>,
    average_rewards: Vec<f64>,
    average_selfishness: Vec<f64>,
    metrics_csv: String,
    max_conservation_error: f64,
    max_simplex_error: f64,
    low_updates: u64,
    high_updates: u64,
}

#[pymethods]
impl PyTrainResult {
    fn final_return(&self, fraction: f64) -> f64 {
        trainer::final_window_mean(&self.average_returns, fraction)
    }

    fn final_reward(&self, fraction: f64) -> f64 {
        trainer::final_window_mean(&self.average_rewards, fraction)
    }
}

/// Trains one seed. `method` is "ltos", "fixed" or "independent".
#[pyfunction]
#[pyo3(signature = (config, method="ltos", seed=1))]
fn train(py: Python<'_>, config: &PyRunConfig, method: &str, seed: u64) -> PyResult<PyTrainResult> {
    let method = match method.parse::<RunMethod>().map_err(err)? {
        RunMethod::Learner(m) => m,
        _ => return Err(PyValueError::new_err(format!("`{method}` is not a learner"))),
    };
    let cfg = config.inner.clone();
    let out = py
        .detach(move || trainer::train(&cfg, method, seed))
        .map_err(err)?;
    Ok(PyTrainResult {
        average_returns: out.metrics.average_returns(),
        average_rewards: out.metrics.average_rewards(),
        average_selfishness: out.metrics.average_selfishness(),
        metrics_csv: out.metrics.to_csv(),
        max_conservation_error: out.stats.max_conservation_error,
        max_simplex_error: out.stats.max_simplex_error,
        low_updates: out.stats.low_updates,
        high_updates: out.stats.high_updates,
    })
}

#[pymodule]
fn ltos_net(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySharingGraph>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyTrainResult>()?;
    m.add_function(wrap_pyfunction!(share_rewards, m)?)?;
    m.add_function(wrap_pyfunction!(selfishness, m)?)?;
    m.add_function(wrap_pyfunction!(prisoner_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(prisoner_payoff_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_matrix_game, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
