//! Config files, seeded multi-run execution and CSV artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::env::{EnvSpec, ForagingConfig, MatrixGame, PrisonerConfig};
use crate::error::{Error, Result};
use crate::high_level::NoiseSpec;
use crate::low_level::EpsilonSchedule;
use crate::nn::{Init, OptimizerKind};
use crate::oracle::{analyze_matrix_game, foraging_reward_bound, prisoner_optimum, prisoner_payoff_matrix};
use crate::trainer::{final_window_mean, trace_to_csv, CadenceUnit, Method, MetricsTable, RunConfig, Trainer};

/// Fraction of episodes averaged for the summary score.
pub const FINAL_WINDOW: f64 = 0.1;

pub const SEED_OFFSET_VAR: &str = "LTOS_SEED_OFFSET";

const COMMON_KEYS: &[&str] = &[
    "env",
    "gamma",
    "tau",
    "low_lr",
    "high_lr",
    "low_optimizer",
    "high_optimizer",
    "epsilon_start",
    "epsilon_decay",
    "epsilon_end",
    "epsilon_unit",
    "noise",
    "noise_epsilon",
    "noise_sigma",
    "noise_theta",
    "noise_scale_with_epsilon",
    "low_sample_size",
    "low_batch_size",
    "high_sample_size",
    "high_batch_size",
    "buffer_capacity",
    "low_update_every",
    "high_update_every",
    "high_update_unit",
    "action_interval",
    "selfishness",
    "selfishness_k",
    "episodes",
    "max_steps",
    "hidden",
    "high_hidden",
    "init",
    "eval_episodes",
    "seeds",
];

const PRISONER_KEYS: &[&str] = &["end_offset", "step_cost", "horizon"];
const FORAGING_KEYS: &[&str] = &["grid", "n_agents", "n_foods", "k", "horizon", "food_consumed"];
const MATRIX_KEYS: &[&str] = &["payoffs"];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some((line, v)) = self.take(key) {
            *slot = v.parse().map_err(|_| Error::Config {
                line,
                msg: format!("cannot parse `{v}` for `{key}`"),
            })?;
        }
        Ok(())
    }

    fn with<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Option<T>) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => f(&v).map(Some).ok_or_else(|| Error::Config {
                line,
                msg: format!("invalid value `{v}` for `{key}`"),
            }),
        }
    }
}

fn parse_optimizer(v: &str) -> Option<OptimizerKind> {
    match v {
        "sgd" => Some(OptimizerKind::Sgd),
        "adam" => Some(OptimizerKind::Adam),
        _ => None,
    }
}

fn optimizer_name(k: OptimizerKind) -> &'static str {
    match k {
        OptimizerKind::Sgd => "sgd",
        OptimizerKind::Adam => "adam",
    }
}

fn parse_unit(v: &str) -> Option<CadenceUnit> {
    match v {
        "step" | "steps" => Some(CadenceUnit::Step),
        "episode" | "episodes" => Some(CadenceUnit::Episode),
        _ => None,
    }
}

fn unit_name(u: CadenceUnit) -> &'static str {
    match u {
        CadenceUnit::Step => "step",
        CadenceUnit::Episode => "episode",
    }
}

fn parse_pair(v: &str) -> Option<[usize; 2]> {
    let parts: Vec<usize> = v.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    <[usize; 2]>::try_from(parts).ok()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Comma-separated list of seeds.
pub fn parse_seeds(v: &str) -> Option<Vec<u64>> {
    let seeds: Vec<u64> = v
        .split(',')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    (!seeds.is_empty()).then_some(seeds)
}

/// Parses `key=value` lines (`#` starts a comment). `env` picks the defaults
/// every other key overrides.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected key=value, got `{content}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config {
                line,
                msg: "empty key".into(),
            });
        }
        if map.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(Error::Config {
                line,
                msg: format!("duplicate key `{k}`"),
            });
        }
    }
    let mut e = Entries { map };

    let mut cfg = match e.take("env") {
        None => RunConfig::prisoner(),
        Some((line, name)) => RunConfig::for_env_name(&name).map_err(|err| Error::Config {
            line,
            msg: err.to_string(),
        })?,
    };
    let env_keys = match cfg.env {
        EnvSpec::Prisoner(_) => PRISONER_KEYS,
        EnvSpec::Foraging(_) => FORAGING_KEYS,
        EnvSpec::Matrix(_) => MATRIX_KEYS,
    };
    if let Some((key, (line, _))) = e
        .map
        .iter()
        .find(|(k, _)| !COMMON_KEYS.contains(&k.as_str()) && !env_keys.contains(&k.as_str()))
    {
        return Err(Error::Config {
            line: *line,
            msg: format!("unknown key `{key}` for env={}", cfg.env.name()),
        });
    }

    match &mut cfg.env {
        EnvSpec::Prisoner(p) => {
            e.parse("end_offset", &mut p.end_offset)?;
            e.parse("step_cost", &mut p.step_cost)?;
            e.parse("horizon", &mut p.horizon)?;
        }
        EnvSpec::Foraging(f) => {
            e.parse("grid", &mut f.grid)?;
            e.parse("n_agents", &mut f.n_agents)?;
            e.parse("n_foods", &mut f.n_foods)?;
            e.parse("k", &mut f.k)?;
            e.parse("horizon", &mut f.horizon)?;
            if let Some(b) = e.with("food_consumed", parse_bool)? {
                f.food_consumed = b;
            }
        }
        EnvSpec::Matrix(g) => {
            if let Some(p) = e.with("payoffs", |v| {
                let xs: Vec<f64> = v.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
                (xs.len() == 8).then(|| {
                    let mut p = [[[0.0; 2]; 2]; 2];
                    for (i, x) in xs.into_iter().enumerate() {
                        p[i / 4][(i / 2) % 2][i % 2] = x;
                    }
                    p
                })
            })? {
                *g = MatrixGame::new(p)?;
            }
        }
    }

    e.parse("gamma", &mut cfg.gamma)?;
    e.parse("tau", &mut cfg.tau)?;
    e.parse("low_lr", &mut cfg.low_lr)?;
    e.parse("high_lr", &mut cfg.high_lr)?;
    if let Some(k) = e.with("low_optimizer", parse_optimizer)? {
        cfg.low_optimizer = k;
    }
    if let Some(k) = e.with("high_optimizer", parse_optimizer)? {
        cfg.high_optimizer = k;
    }
    let EpsilonSchedule {
        mut start,
        mut decay,
        mut end,
    } = cfg.epsilon;
    e.parse("epsilon_start", &mut start)?;
    e.parse("epsilon_decay", &mut decay)?;
    e.parse("epsilon_end", &mut end)?;
    cfg.epsilon = EpsilonSchedule { start, decay, end };
    if let Some(u) = e.with("epsilon_unit", parse_unit)? {
        cfg.epsilon_unit = u;
    }

    let (mut n_eps, mut sigma, mut theta) = match cfg.noise {
        NoiseSpec::EpsilonGaussian { epsilon, sigma } => (epsilon, sigma, 0.15),
        NoiseSpec::OrnsteinUhlenbeck { sigma, theta } => (0.8, sigma, theta),
        NoiseSpec::None => (0.8, 1.0, 0.15),
    };
    let kind = e.with("noise", |v| match v {
        "none" | "gaussian" | "ou" => Some(v.to_string()),
        _ => None,
    })?;
    e.parse("noise_epsilon", &mut n_eps)?;
    e.parse("noise_sigma", &mut sigma)?;
    e.parse("noise_theta", &mut theta)?;
    let kind = kind.unwrap_or_else(|| {
        match cfg.noise {
            NoiseSpec::None => "none",
            NoiseSpec::EpsilonGaussian { .. } => "gaussian",
            NoiseSpec::OrnsteinUhlenbeck { .. } => "ou",
        }
        .to_string()
    });
    cfg.noise = match kind.as_str() {
        "none" => NoiseSpec::None,
        "gaussian" => NoiseSpec::EpsilonGaussian { epsilon: n_eps, sigma },
        _ => NoiseSpec::OrnsteinUhlenbeck { sigma, theta },
    };
    if let Some(b) = e.with("noise_scale_with_epsilon", parse_bool)? {
        cfg.noise_scales_with_epsilon = b;
    }

    e.parse("low_sample_size", &mut cfg.low_sample_size)?;
    e.parse("low_batch_size", &mut cfg.low_batch_size)?;
    e.parse("high_sample_size", &mut cfg.high_sample_size)?;
    e.parse("high_batch_size", &mut cfg.high_batch_size)?;
    e.parse("buffer_capacity", &mut cfg.buffer_capacity)?;
    e.parse("low_update_every", &mut cfg.low_update_every)?;
    if let Some(v) = e.with("high_update_every", |v| match v {
        "inf" | "never" => Some(None),
        n => n.parse().ok().map(Some),
    })? {
        cfg.high_update_every = v;
    }
    if let Some(u) = e.with("high_update_unit", parse_unit)? {
        cfg.high_update_unit = u;
    }
    e.parse("action_interval", &mut cfg.action_interval)?;
    e.parse("selfishness", &mut cfg.selfishness)?;
    if let Some(v) = e.with("selfishness_k", |v| match v {
        "auto" => Some(None),
        n => n.parse().ok().map(Some),
    })? {
        cfg.selfishness_k = v;
    }
    e.parse("episodes", &mut cfg.episodes)?;
    if let Some(v) = e.with("max_steps", |v| match v {
        "none" => Some(None),
        n => n.parse().ok().map(Some),
    })? {
        cfg.max_steps = v;
    }
    if let Some(h) = e.with("hidden", parse_pair)? {
        cfg.hidden = h;
    }
    if let Some(h) = e.with("high_hidden", parse_pair)? {
        cfg.high_hidden = h;
    }
    if let Some(i) = e.with("init", |v| match v.split_once(':') {
        None if v == "uniform" => Some(Init::UniformFanIn),
        None if v == "zeros" => Some(Init::Zeros),
        Some(("normal", std)) => std.parse().ok().map(|std| Init::Normal { std }),
        _ => None,
    })? {
        cfg.init = i;
    }
    e.parse("eval_episodes", &mut cfg.eval_episodes)?;
    if let Some(s) = e.with("seeds", parse_seeds)? {
        cfg.seeds = s;
    }
    debug_assert!(e.map.is_empty(), "unhandled keys {:?}", e.map.keys());

    cfg.validate().map_err(|err| Error::Config {
        line: 0,
        msg: err.to_string(),
    })?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config { line: 0, msg: format!("{}: {e}", path.display()) })?;
    parse_config_str(&text)
}

/// Serializes every field; `parse_config_str` reads it back unchanged.
pub fn write_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("env", cfg.env.name().to_string());
    match &cfg.env {
        EnvSpec::Prisoner(p) => {
            kv("end_offset", p.end_offset.to_string());
            kv("step_cost", p.step_cost.to_string());
            kv("horizon", p.horizon.to_string());
        }
        EnvSpec::Foraging(f) => {
            kv("grid", f.grid.to_string());
            kv("n_agents", f.n_agents.to_string());
            kv("n_foods", f.n_foods.to_string());
            kv("k", f.k.to_string());
            kv("horizon", f.horizon.to_string());
            kv("food_consumed", f.food_consumed.to_string());
        }
        EnvSpec::Matrix(g) => {
            let xs: Vec<String> = g.payoffs.iter().flatten().flatten().map(f64::to_string).collect();
            kv("payoffs", xs.join(","));
        }
    }
    kv("gamma", cfg.gamma.to_string());
    kv("tau", cfg.tau.to_string());
    kv("low_lr", cfg.low_lr.to_string());
    kv("high_lr", cfg.high_lr.to_string());
    kv("low_optimizer", optimizer_name(cfg.low_optimizer).into());
    kv("high_optimizer", optimizer_name(cfg.high_optimizer).into());
    kv("epsilon_start", cfg.epsilon.start.to_string());
    kv("epsilon_decay", cfg.epsilon.decay.to_string());
    kv("epsilon_end", cfg.epsilon.end.to_string());
    kv("epsilon_unit", unit_name(cfg.epsilon_unit).into());
    match cfg.noise {
        NoiseSpec::None => kv("noise", "none".into()),
        NoiseSpec::EpsilonGaussian { epsilon, sigma } => {
            kv("noise", "gaussian".into());
            kv("noise_epsilon", epsilon.to_string());
            kv("noise_sigma", sigma.to_string());
        }
        NoiseSpec::OrnsteinUhlenbeck { sigma, theta } => {
            kv("noise", "ou".into());
            kv("noise_sigma", sigma.to_string());
            kv("noise_theta", theta.to_string());
        }
    }
    kv("noise_scale_with_epsilon", cfg.noise_scales_with_epsilon.to_string());
    kv("low_sample_size", cfg.low_sample_size.to_string());
    kv("low_batch_size", cfg.low_batch_size.to_string());
    kv("high_sample_size", cfg.high_sample_size.to_string());
    kv("high_batch_size", cfg.high_batch_size.to_string());
    kv("buffer_capacity", cfg.buffer_capacity.to_string());
    kv("low_update_every", cfg.low_update_every.to_string());
    kv(
        "high_update_every",
        cfg.high_update_every.map_or("inf".into(), |n| n.to_string()),
    );
    kv("high_update_unit", unit_name(cfg.high_update_unit).into());
    kv("action_interval", cfg.action_interval.to_string());
    kv("selfishness", cfg.selfishness.to_string());
    kv("selfishness_k", cfg.selfishness_k.map_or("auto".into(), |k| k.to_string()));
    kv("episodes", cfg.episodes.to_string());
    kv("max_steps", cfg.max_steps.map_or("none".into(), |n| n.to_string()));
    kv("hidden", format!("{},{}", cfg.hidden[0], cfg.hidden[1]));
    kv("high_hidden", format!("{},{}", cfg.high_hidden[0], cfg.high_hidden[1]));
    kv(
        "init",
        match cfg.init {
            Init::UniformFanIn => "uniform".into(),
            Init::Zeros => "zeros".into(),
            Init::Normal { std } => format!("normal:{std}"),
        },
    );
    kv("eval_episodes", cfg.eval_episodes.to_string());
    kv(
        "seeds",
        cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    );
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Train,
    Oracle,
    Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMethod {
    Learner(Method),
    Oracle,
    Matrix,
}

impl std::str::FromStr for RunMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ltos" => RunMethod::Learner(Method::Ltos),
            "fixed" => RunMethod::Learner(Method::Fixed),
            "independent" | "iq" => RunMethod::Learner(Method::Independent),
            "oracle" => RunMethod::Oracle,
            "matrix" => RunMethod::Matrix,
            other => return Err(Error::Param(format!("unknown method `{other}`"))),
        })
    }
}

/// One harness invocation.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: PathBuf,
    pub method: RunMethod,
    /// Overrides the config's seed list when present.
    pub seeds: Option<Vec<u64>>,
    pub out: PathBuf,
    pub episodes: Option<usize>,
    /// Added to every seed.
    pub seed_offset: u64,
}

/// Per-seed result of a training run.
#[derive(Clone, Debug)]
pub struct SeedReport {
    pub seed: u64,
    pub metrics: MetricsTable,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub seeds: Vec<SeedReport>,
    pub summary: String,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.seeds.iter().all(|s| s.error.is_none())
    }
}

/// Reads the seed offset from the environment; absent means 0.
pub fn seed_offset_from_env() -> Result<u64> {
    match std::env::var(SEED_OFFSET_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Param(format!("{SEED_OFFSET_VAR}=`{v}` is not an integer"))),
        Err(_) => Ok(0),
    }
}

/// Rows `episode,return_mean,return_min,return_max,reward_mean,reward_min,reward_max`
/// over the episodes every table covers.
pub fn aggregate_csv(tables: &[&MetricsTable]) -> String {
    let mut out = String::from("episode,return_mean,return_min,return_max,reward_mean,reward_min,reward_max\n");
    if tables.is_empty() {
        return out;
    }
    let returns: Vec<Vec<f64>> = tables.iter().map(|t| t.average_returns()).collect();
    let rewards: Vec<Vec<f64>> = tables.iter().map(|t| t.average_rewards()).collect();
    let n = returns.iter().map(Vec::len).min().unwrap_or(0);
    let stats = |xs: &[Vec<f64>], e: usize| {
        let col: Vec<f64> = xs.iter().map(|v| v[e]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (mean, min, max)
    };
    for e in 0..n {
        let (a, b, c) = stats(&returns, e);
        let (d, f, g) = stats(&rewards, e);
        let _ = writeln!(out, "{e},{a},{b},{c},{d},{f},{g}");
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn train_seed(cfg: &RunConfig, method: Method, seed: u64, dir: &Path) -> SeedReport {
    let mut trainer = match Trainer::new(cfg.clone(), method, seed) {
        Ok(t) => t,
        Err(e) => {
            return SeedReport {
                seed,
                metrics: MetricsTable::default(),
                error: Some(e.to_string()),
            }
        }
    };
    let result = trainer.train().and_then(|_| {
        trainer.save_checkpoints(dir)?;
        let trace = trainer.trace_episode()?;
        write(&dir.join("trace.csv"), &trace_to_csv(&trace))
    });
    let metrics = trainer.metrics().clone();
    let flushed = write(&dir.join("metrics.csv"), &metrics.to_csv());
    let error = result.err().or(flushed.err()).map(|e| e.to_string());
    SeedReport { seed, metrics, error }
}

/// Executes a manifest and writes its artifacts under `manifest.out`.
pub fn run(manifest: &RunManifest) -> Result<RunReport> {
    let mut cfg = parse_config(&manifest.config_path)?;
    if let Some(n) = manifest.episodes {
        cfg.episodes = n;
    }
    let seeds: Vec<u64> = manifest
        .seeds
        .clone()
        .unwrap_or_else(|| cfg.seeds.clone())
        .into_iter()
        .map(|s| s.wrapping_add(manifest.seed_offset))
        .collect();
    if seeds.is_empty() {
        return Err(Error::Param("at least one seed is required".into()));
    }
    fs::create_dir_all(&manifest.out)?;
    let method = match manifest.command {
        Command::Oracle => RunMethod::Oracle,
        Command::Matrix => RunMethod::Matrix,
        Command::Train => manifest.method,
    };
    match method {
        RunMethod::Oracle => run_oracle(&cfg, &seeds, &manifest.out),
        RunMethod::Matrix => run_matrix(&cfg, &manifest.out),
        RunMethod::Learner(m) => {
            let mut report = RunReport::default();
            for &seed in &seeds {
                report.seeds.push(train_seed(&cfg, m, seed, &manifest.out.join(seed.to_string())));
            }
            let done: Vec<&SeedReport> = report.seeds.iter().filter(|s| s.error.is_none()).collect();
            let tables: Vec<&MetricsTable> = done.iter().map(|s| &s.metrics).collect();
            write(&manifest.out.join("aggregate.csv"), &aggregate_csv(&tables))?;
            let mut summary = String::from("seed,final_return,final_reward,episodes,status\n");
            let mut finals = Vec::new();
            for s in &report.seeds {
                let ret = final_window_mean(&s.metrics.average_returns(), FINAL_WINDOW);
                let rew = final_window_mean(&s.metrics.average_rewards(), FINAL_WINDOW);
                if s.error.is_none() {
                    finals.push((ret, rew));
                }
                let status = if s.error.is_none() { "ok" } else { "failed" };
                let _ = writeln!(summary, "{},{ret},{rew},{},{status}", s.seed, s.metrics.n_episodes());
            }
            write(&manifest.out.join("summary.csv"), &summary)?;
            let k = finals.len().max(1) as f64;
            report.summary = format!(
                "method={} env={} seeds={}/{} final_return={:.4} final_reward={:.4}",
                m.name(),
                cfg.env.name(),
                finals.len(),
                seeds.len(),
                finals.iter().map(|f| f.0).sum::<f64>() / k,
                finals.iter().map(|f| f.1).sum::<f64>() / k,
            );
            Ok(report)
        }
    }
}

fn run_oracle(cfg: &RunConfig, seeds: &[u64], out: &Path) -> Result<RunReport> {
    match &cfg.env {
        EnvSpec::Prisoner(p) => {
            let vi = prisoner_optimum(p)?;
            write(
                &out.join("oracle.csv"),
                &format!(
                    "optimal_return,n_states,iterations\n{},{},{}\n",
                    vi.optimal_average_return, vi.n_states, vi.iterations
                ),
            )?;
            Ok(RunReport {
                seeds: Vec::new(),
                summary: format!(
                    "oracle optimal_return={:.6} n_states={} iterations={}",
                    vi.optimal_average_return, vi.n_states, vi.iterations
                ),
            })
        }
        EnvSpec::Foraging(f) => {
            let mut csv = String::from("seed,reward_upper_bound\n");
            let mut sum = 0.0;
            for &s in seeds {
                let b = foraging_bound_for_seed(f, s)?;
                sum += b;
                let _ = writeln!(csv, "{s},{b}");
            }
            write(&out.join("bound.csv"), &csv)?;
            Ok(RunReport {
                seeds: Vec::new(),
                summary: format!("bound mean_reward_upper_bound={:.6}", sum / seeds.len() as f64),
            })
        }
        EnvSpec::Matrix(_) => Err(Error::Oracle("use the matrix command for matrix games".into())),
    }
}

/// Bound for the first evaluation episode a trainer with this seed plays.
fn foraging_bound_for_seed(f: &ForagingConfig, seed: u64) -> Result<f64> {
    foraging_reward_bound(f, crate::trainer::eval_env_seed(seed))
}

fn run_matrix(cfg: &RunConfig, out: &Path) -> Result<RunReport> {
    let game = match &cfg.env {
        EnvSpec::Matrix(g) => g.clone(),
        EnvSpec::Prisoner(p) => prisoner_payoff_matrix(p)?,
        EnvSpec::Foraging(_) => prisoner_payoff_matrix(&PrisonerConfig::default())?,
    };
    let a = analyze_matrix_game(&game);
    let label = |(x, y): (usize, usize)| {
        let c = |v| if v == 0 { 'C' } else { 'D' };
        format!("{}{}", c(x), c(y))
    };
    let mut csv = String::from("profile,payoff_a,payoff_b,nash,welfare_optimal\n");
    for p in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let v = game.payoff(p.0, p.1);
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            label(p),
            v[0],
            v[1],
            a.nash.contains(&p),
            a.welfare_optimal.contains(&p)
        );
    }
    write(&out.join("matrix.csv"), &csv)?;
    let names = |ps: &[(usize, usize)]| ps.iter().map(|&p| label(p)).collect::<Vec<_>>().join("|");
    Ok(RunReport {
        seeds: Vec::new(),
        summary: format!(
            "matrix nash={} welfare_optimal={} dilemma={}",
            names(&a.nash),
            names(&a.welfare_optimal),
            a.dilemma
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_prisoner_defaults() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c, RunConfig::prisoner());
        assert_eq!(c.gamma, 0.99);
        assert_eq!(c.tau, 0.1);
        assert_eq!(c.low_lr, 1e-3);
        assert_eq!(c.high_lr, 1e-1);
        assert_eq!((c.epsilon.start, c.epsilon.decay, c.epsilon.end), (0.8, 1.0, 0.8));
        assert_eq!(c.selfishness, 0.5);
    }

    #[test]
    fn foraging_defaults() {
        let c = parse_config_str("env=foraging\n").unwrap();
        assert_eq!(c.gamma, 0.96);
        assert_eq!((c.epsilon.start, c.epsilon.decay, c.epsilon.end), (0.6, 0.996, 0.01));
        assert_eq!(c.selfishness, 0.5);
        assert_eq!(c.high_update_every, Some(100));
        assert_eq!(c.high_update_unit, CadenceUnit::Episode);
    }

    #[test]
    fn errors_are_located() {
        assert!(matches!(parse_config_str("gamma=1.5"), Err(Error::Config { .. })));
        match parse_config_str("# c\nfoo=1\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_config_str("gamma").is_err());
        assert!(parse_config_str("gamma=abc").is_err());
        assert!(parse_config_str("gamma=0.9\ngamma=0.8").is_err());
        assert!(parse_config_str("grid=5").is_err());
        assert!(parse_config_str("noise=pink").is_err());
    }

    #[test]
    fn comments_and_overrides() {
        let c = parse_config_str("  # header\nenv = foraging # jungle\nhidden=16,8\nhigh_update_every=inf\nseeds=3,4\n").unwrap();
        assert_eq!(c.hidden, [16, 8]);
        assert_eq!(c.high_update_every, None);
        assert_eq!(c.seeds, vec![3, 4]);
    }

    #[test]
    fn write_parse_roundtrip() {
        let mut odd = RunConfig::foraging();
        odd.noise = NoiseSpec::EpsilonGaussian { epsilon: 0.3, sigma: 0.1 + 0.2 };
        odd.init = Init::Normal { std: 0.05 };
        odd.max_steps = Some(123);
        odd.selfishness_k = Some(2);
        let game = MatrixGame::new([[[1.5, -2.0], [0.0, 3.0]], [[4.0, 5.0], [6.0, 7.25]]]).unwrap();
        for c in [RunConfig::prisoner(), RunConfig::foraging(), odd, RunConfig::matrix(game)] {
            assert_eq!(parse_config_str(&write_config(&c)).unwrap(), c);
        }
    }

    #[test]
    fn aggregate_is_order_statistics() {
        use crate::trainer::MetricsRow;
        let table = |vals: &[f64]| MetricsTable {
            rows: vals
                .iter()
                .enumerate()
                .map(|(e, &v)| MetricsRow {
                    episode: e as u64,
                    step: e as u64,
                    agent: 0,
                    ret: v,
                    reward: v / 2.0,
                    selfishness: 0.5,
                    q_loss: 0.0,
                })
                .collect(),
        };
        let (a, b, c) = (table(&[1.0, 2.0]), table(&[3.0, 0.0]), table(&[2.0, 4.0, 9.0]));
        let csv = aggregate_csv(&[&a, &b, &c]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0,2,1,3,1,0.5,1.5");
        assert_eq!(lines[2], "1,2,0,4,1,0,2");
    }

    #[test]
    fn seeds_and_methods() {
        assert_eq!(parse_seeds("1, 2,3"), Some(vec![1, 2, 3]));
        assert_eq!(parse_seeds("1,x"), None);
        assert!("oracle".parse::<RunMethod>().is_ok());
        assert!("dqn".parse::<RunMethod>().is_err());
    }
}
