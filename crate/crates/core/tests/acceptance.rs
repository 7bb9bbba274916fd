//! End-to-end acceptance checks.
//!
//! Every test prints exactly one `PASS` or `FAIL` line. Exact properties are
//! asserted. Learning outcomes (1, 2, 3 and 8) depend on training dynamics;
//! they are reported, and asserted only when `LTOS_STRICT_ACCEPTANCE` is set.

use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;

use ltos_core::env::{EnvSpec, ForagingConfig, PrisonerConfig};
use ltos_core::harness::parse_config;
use ltos_core::high_level::{HighPolicy, NoiseProcess, NoiseSpec, PolicyRecord};
use ltos_core::low_level::{argmax, QNetwork, Transition};
use ltos_core::nn::{Activation, Init, Mlp};
use ltos_core::oracle::{analyze_matrix_game, prisoner_optimum, prisoner_payoff_matrix};
use ltos_core::sharing::check_simplex;
use ltos_core::trainer::{
    episodes_to_threshold, final_window_mean, train, Method, RunConfig, TrainOutcome, Trainer,
};
use ltos_core::{share_rewards, AgentId, NeighborMap, SharingGraph, WeightAssignment};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FINAL_WINDOW: f64 = 0.1;
const S0_GRID: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

fn strict() -> bool {
    std::env::var_os("LTOS_STRICT_ACCEPTANCE").is_some()
}

/// Writes to the process stdout so the line survives test output capture.
fn report(id: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stdout(), "{verdict} criterion {id}: {detail}");
}

/// Prints the verdict; panics on failure.
fn exact(id: u32, ok: bool, detail: &str) {
    report(id, ok, detail);
    assert!(ok, "criterion {id}: {detail}");
}

/// Prints the verdict; panics on failure only in strict mode.
fn learned(id: u32, ok: bool, detail: &str) {
    report(id, ok, detail);
    if strict() {
        assert!(ok, "criterion {id}: {detail}");
    }
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn fmt(values: &[f64]) -> String {
    let v: Vec<String> = values.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", v.join(", "))
}

struct PrisonerRuns {
    config: RunConfig,
    ltos: Vec<TrainOutcome>,
    fixed: Vec<TrainOutcome>,
    independent: Vec<TrainOutcome>,
}

fn prisoner_runs() -> &'static PrisonerRuns {
    static RUNS: OnceLock<PrisonerRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let config = parse_config(&config_path("prisoner.cfg")).unwrap();
        let run = |method| {
            config
                .seeds
                .iter()
                .map(|&s| train(&config, method, s).unwrap())
                .collect::<Vec<_>>()
        };
        PrisonerRuns {
            ltos: run(Method::Ltos),
            fixed: run(Method::Fixed),
            independent: run(Method::Independent),
            config,
        }
    })
}

fn final_returns(runs: &[TrainOutcome]) -> Vec<f64> {
    runs.iter()
        .map(|o| final_window_mean(&o.metrics.average_returns(), FINAL_WINDOW))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_budget_and_optimum(p: &PrisonerRuns, runs: &[TrainOutcome]) {
    let optimum = match &p.config.env {
        EnvSpec::Prisoner(c) => prisoner_optimum(c).unwrap().optimal_average_return,
        _ => unreachable!(),
    };
    let budget = p.config.max_steps.unwrap();
    for o in runs {
        assert!(o.metrics.rows.last().unwrap().step <= budget);
        for r in o.metrics.average_returns() {
            assert!(r <= optimum + 1e-6, "return {r} exceeds the optimum {optimum}");
        }
    }
}

#[test]
fn criterion_1_prisoner_cooperation() {
    let p = prisoner_runs();
    check_budget_and_optimum(p, &p.ltos);
    let r = final_returns(&p.ltos);
    let hits = r.iter().filter(|&&x| x >= 0.9).count();
    let ok = mean(&r) >= 0.9 && hits >= 4;
    learned(
        1,
        ok,
        &format!("ltos final returns {} mean {:.3}, {hits}/5 >= 0.90", fmt(&r), mean(&r)),
    );
}

#[test]
fn criterion_2_defect_equilibrium() {
    let p = prisoner_runs();
    check_budget_and_optimum(p, &p.independent);
    let r = final_returns(&p.independent);
    let hits = r.iter().filter(|&&x| (0.4..=0.6).contains(&x)).count();
    learned(
        2,
        hits >= 4,
        &format!("independent final returns {}, {hits}/5 in [0.40, 0.60]", fmt(&r)),
    );
}

fn median(mut v: Vec<usize>) -> usize {
    v.sort_unstable();
    v[v.len() / 2]
}

#[test]
fn criterion_3_faster_than_fixed_sharing() {
    let p = prisoner_runs();
    check_budget_and_optimum(p, &p.fixed);
    let to_threshold = |runs: &[TrainOutcome]| -> Vec<usize> {
        runs.iter()
            .map(|o| {
                episodes_to_threshold(&o.metrics.average_returns(), 0.9, 1).unwrap_or(usize::MAX)
            })
            .collect()
    };
    let l = to_threshold(&p.ltos);
    let f = to_threshold(&p.fixed);
    let (ml, mf) = (median(l.clone()), median(f.clone()));
    let show = |v: &[usize]| {
        let s: Vec<String> = v
            .iter()
            .map(|&x| if x == usize::MAX { "never".into() } else { x.to_string() })
            .collect();
        s.join(",")
    };
    learned(
        3,
        ml <= mf,
        &format!("episodes to 0.9: ltos [{}] vs fixed [{}]", show(&l), show(&f)),
    );
}

fn random_graph(rng: &mut ChaCha8Rng) -> SharingGraph {
    let n = rng.random_range(1..=9);
    if rng.random_bool(0.5) {
        let positions: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(0..10) as f64, rng.random_range(0..10) as f64])
            .collect();
        return SharingGraph::knn(&positions, rng.random_range(0..n.min(4))).unwrap();
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    SharingGraph::build(n, &edges, n.saturating_sub(1)).unwrap()
}

fn random_simplex(rng: &mut ChaCha8Rng, keys: &[AgentId]) -> NeighborMap {
    let raw: Vec<f64> = keys.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    NeighborMap::zip(keys, &raw.iter().map(|v| v / s).collect::<Vec<_>>())
}

fn foraging_smoke() -> &'static TrainOutcome {
    static RUN: OnceLock<TrainOutcome> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut config = RunConfig::foraging();
        config.env = EnvSpec::Foraging(ForagingConfig {
            horizon: 20,
            ..ForagingConfig::default()
        });
        config.hidden = [16, 16];
        config.high_hidden = [16, 16];
        config.episodes = 6;
        config.high_sample_size = 40;
        config.high_update_every = Some(1);
        train(&config, Method::Ltos, 7).unwrap()
    })
}

#[test]
fn criterion_4_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let triples = 10_000;
    for _ in 0..triples {
        let g = random_graph(&mut rng);
        let out: Vec<NeighborMap> = (0..g.n_agents())
            .map(|i| random_simplex(&mut rng, g.neighbors(i)))
            .collect();
        let w = WeightAssignment::new(&g, out).unwrap();
        let scale = 10f64.powi(rng.random_range(-3..4));
        let raw: Vec<f64> = (0..g.n_agents()).map(|_| scale * rng.random_range(-5.0..5.0)).collect();
        let shaped = share_rewards(&g, &w, &raw).unwrap();
        let total: f64 = raw.iter().sum();
        let err = (shaped.iter().sum::<f64>() - total).abs() / total.abs().max(1.0);
        worst = worst.max(err);
    }
    let p = prisoner_runs();
    let mut training: f64 = foraging_smoke().stats.max_conservation_error;
    for o in p.ltos.iter().chain(&p.fixed).chain(&p.independent) {
        training = training.max(o.stats.max_conservation_error);
    }
    exact(
        4,
        worst <= 1e-9 && training <= 1e-9,
        &format!("max relative error {worst:.2e} over {triples} triples, {training:.2e} over training runs"),
    );
}

#[test]
fn criterion_5_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let specs = [
        NoiseSpec::None,
        NoiseSpec::EpsilonGaussian {
            epsilon: 1.0,
            sigma: 3.0,
        },
        NoiseSpec::OrnsteinUhlenbeck {
            sigma: 2.0,
            theta: 0.15,
        },
    ];
    let mut emissions = 0u64;
    let mut worst: f64 = 0.0;
    let mut bad_entries = 0u64;
    for case in 0..400 {
        let k_max = rng.random_range(1..8);
        let obs_dim = rng.random_range(1..6);
        let std = [0.1, 1.0, 10.0][case % 3];
        let policy = HighPolicy::new(obs_dim, k_max, [8, 8], Init::Normal { std }, &mut rng);
        let mut noise = NoiseProcess::new(specs[case % 3], k_max + 1);
        for _ in 0..250 {
            let agent = rng.random_range(0..=k_max);
            let mut others: Vec<AgentId> = (0..=k_max).filter(|&j| j != agent).collect();
            others.shuffle(&mut rng);
            let mut nbrs: Vec<AgentId> = others[..rng.random_range(0..=k_max)].to_vec();
            nbrs.push(agent);
            nbrs.sort_unstable();
            let o: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let w = policy
                .emit_weights(agent, &o, &nbrs, Some((&mut noise, 1.0)), &mut rng)
                .unwrap();
            worst = worst.max((w.sum() - 1.0).abs());
            bad_entries += w.values().filter(|v| !(0.0..=1.0).contains(v)).count() as u64;
            if check_simplex(&w).is_err() {
                bad_entries += 1;
            }
            emissions += 1;
        }
    }
    let p = prisoner_runs();
    let mut training: f64 = foraging_smoke().stats.max_simplex_error;
    let mut training_emissions = foraging_smoke().stats.emissions;
    for o in p.ltos.iter().chain(&p.fixed) {
        training = training.max(o.stats.max_simplex_error);
        training_emissions += o.stats.emissions;
    }
    exact(
        5,
        emissions >= 100_000 && worst <= 1e-6 && bad_entries == 0 && training <= 1e-6,
        &format!(
            "max |sum - 1| {worst:.2e} over {emissions} emissions, {training:.2e} over {training_emissions} training emissions"
        ),
    );
}

/// Central difference with the step shrunk while a ReLU kink sits inside it.
fn central_diff(f: impl Fn(f64) -> f64) -> f64 {
    let c = f(0.0);
    let mut h = 1e-5;
    loop {
        let (up, down) = ((f(h) - c) / h, (c - f(-h)) / h);
        if h < 1e-9 || (up - down).abs() <= 1e-7 + 1e-5 * (up.abs() + down.abs()) {
            return (up + down) / 2.0;
        }
        h /= 10.0;
    }
}

fn close(an: f64, fd: f64) -> bool {
    (an - fd).abs() <= 1e-4 * an.abs().max(fd.abs()) + 1e-7
}

fn randomize_biases(net: &mut Mlp, rng: &mut ChaCha8Rng) {
    for layer in net.layers_mut() {
        layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    }
}

fn mlp_instance(rng: &mut ChaCha8Rng) -> bool {
    let sizes = [rng.random_range(1..6), rng.random_range(2..8), rng.random_range(2..8), rng.random_range(1..5)];
    let mut net = Mlp::new(&sizes, Activation::Relu, Activation::Identity, Init::Normal { std: 0.8 }, rng);
    randomize_biases(&mut net, rng);
    let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
    let up: Vec<f64> = (0..sizes[3]).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = |n: &Mlp, x: &[f64]| -> f64 { n.forward(x).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum() };
    let (g, dx) = net.backward(&net.forward_trace(&x).unwrap(), &up).unwrap();
    let flat = g.flat();
    let mut ok = true;
    for k in 0..flat.len() {
        let fd = central_diff(|d| {
            let mut m = net.clone();
            *m.params_mut().nth(k).unwrap() += d;
            f(&m, &x)
        });
        ok &= close(flat[k], fd);
    }
    for k in 0..x.len() {
        let fd = central_diff(|d| {
            let mut xx = x.clone();
            xx[k] += d;
            f(&net, &xx)
        });
        ok &= close(dx[k], fd);
    }
    ok
}

fn q_instance(rng: &mut ChaCha8Rng) -> (bool, bool) {
    let obs_dim = rng.random_range(1..5);
    let n_actions = rng.random_range(2..5);
    let mut q = QNetwork::new(obs_dim, n_actions, [6, 5], Init::Normal { std: 0.8 }, rng);
    for net in [&mut q.self_encoder, &mut q.neighbor_encoder, &mut q.head] {
        randomize_biases(net, rng);
    }
    let n = rng.random_range(2..6);
    let agent = rng.random_range(0..n);
    let neighbors: Vec<AgentId> = (0..n).collect();
    let w_in = random_simplex(rng, &neighbors);
    let obs = |rng: &mut ChaCha8Rng| (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let o = obs(rng);

    let g = q.q_input_gradient(agent, &o, &neighbors, &w_in).unwrap();
    let a_star = argmax(&q.q_values(agent, &o, &neighbors, &w_in).unwrap());
    let mut input_ok = true;
    for &j in &neighbors {
        let fd = central_diff(|d| {
            let w = NeighborMap::from_pairs(
                w_in.iter().map(|(k, v)| (k, if k == j { v + d } else { v })).collect(),
            );
            q.q_values(agent, &o, &neighbors, &w).unwrap()[a_star]
        });
        input_ok &= close(g.get(j).unwrap(), fd);
    }

    let records: Vec<Transition> = (0..3)
        .map(|t| Transition {
            agent,
            timestamp: t,
            o: obs(rng),
            w_in: random_simplex(rng, &neighbors),
            a: rng.random_range(0..n_actions),
            r_w: rng.random_range(-1.0..1.0),
            o_next: obs(rng),
            neighbors: neighbors.clone(),
            neighbors_next: neighbors.clone(),
            done: false,
        })
        .collect();
    let batch: Vec<(&Transition, f64)> = records.iter().map(|t| (t, rng.random_range(-1.0..1.0))).collect();
    let (_, grads) = q.td_loss_and_grad(&batch).unwrap();
    let flat = grads.flat();
    let sizes = [
        q.self_encoder.n_params(),
        q.neighbor_encoder.n_params(),
        q.head.n_params(),
    ];
    let mut param_ok = true;
    for k in 0..flat.len() {
        let fd = central_diff(|d| {
            let mut m = q.clone();
            let (part, idx) = if k < sizes[0] {
                (&mut m.self_encoder, k)
            } else if k < sizes[0] + sizes[1] {
                (&mut m.neighbor_encoder, k - sizes[0])
            } else {
                (&mut m.head, k - sizes[0] - sizes[1])
            };
            *part.params_mut().nth(idx).unwrap() += d;
            m.td_loss_and_grad(&batch).unwrap().0
        });
        param_ok &= close(flat[k], fd);
    }
    (input_ok, param_ok)
}

fn policy_instance(rng: &mut ChaCha8Rng) -> bool {
    let obs_dim = rng.random_range(1..5);
    let k_max = rng.random_range(1..5);
    let mut policy = HighPolicy::new(obs_dim, k_max, [6, 6], Init::Normal { std: 0.8 }, rng);
    randomize_biases(&mut policy.net, rng);
    let data: Vec<(AgentId, Vec<f64>, Vec<AgentId>, NeighborMap)> = (0..3)
        .map(|_| {
            let agent = rng.random_range(0..=k_max);
            let mut nbrs: Vec<AgentId> = (0..=k_max).filter(|&j| j != agent && rng.random_bool(0.6)).collect();
            nbrs.push(agent);
            nbrs.sort_unstable();
            let o: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = NeighborMap::zip(&nbrs, &nbrs.iter().map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            (agent, o, nbrs, g)
        })
        .collect();
    let records: Vec<PolicyRecord<'_>> = data
        .iter()
        .map(|(agent, o, nbrs, g)| PolicyRecord {
            agent: *agent,
            o,
            neighbors: nbrs,
            g_out: g,
        })
        .collect();
    let objective = |p: &HighPolicy| -> f64 {
        data.iter()
            .map(|(agent, o, nbrs, g)| {
                let w = p.weights(*agent, o, nbrs).unwrap();
                w.iter().map(|(j, v)| v * g.get(j).unwrap()).sum::<f64>()
            })
            .sum::<f64>()
            / data.len() as f64
    };
    let flat = policy.objective_gradient(&records).unwrap().flat();
    let mut ok = true;
    for k in 0..flat.len() {
        let fd = central_diff(|d| {
            let mut p = policy.clone();
            *p.net.params_mut().nth(k).unwrap() += d;
            objective(&p)
        });
        ok &= close(flat[k], fd);
    }
    ok
}

#[test]
fn criterion_6_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let instances = 100;
    let mut mlp = 0;
    let mut input = 0;
    let mut param = 0;
    let mut policy = 0;
    for _ in 0..instances {
        mlp += mlp_instance(&mut rng) as usize;
        let (i, p) = q_instance(&mut rng);
        input += i as usize;
        param += p as usize;
        policy += policy_instance(&mut rng) as usize;
    }
    let ok = [mlp, input, param, policy].iter().all(|&c| c == instances);
    exact(
        6,
        ok,
        &format!(
            "instances within 1e-4: network {mlp}/{instances}, q input {input}/{instances}, \
             q parameters {param}/{instances}, policy objective {policy}/{instances}"
        ),
    );
}

#[test]
fn criterion_7_synchronized_replay_and_determinism() {
    let mut config = RunConfig::prisoner();
    config.episodes = 150;
    config.high_sample_size = 100;
    let a = train(&config, Method::Ltos, 11).unwrap();
    let b = train(&config, Method::Ltos, 11).unwrap();
    let identical = a.metrics.to_csv().as_bytes() == b.metrics.to_csv().as_bytes();

    let mut forage = RunConfig::foraging();
    forage.env = EnvSpec::Foraging(ForagingConfig {
        horizon: 15,
        ..ForagingConfig::default()
    });
    forage.hidden = [8, 8];
    forage.high_hidden = [8, 8];
    forage.episodes = 4;
    forage.high_sample_size = 40;
    forage.high_update_every = Some(1);
    let mut trainer = Trainer::new(forage, Method::Ltos, 3).unwrap();
    let mut draws = 0u64;
    let mut aligned = true;
    while (trainer.episode() as usize) < trainer.config().episodes {
        trainer.begin_episode().unwrap();
        loop {
            let done = trainer.rollout_step().unwrap();
            if trainer.update_step().unwrap().is_some() {
                let d = &trainer.last_draw;
                let mut first = d[0].clone();
                first.sort_unstable();
                aligned &= d.iter().all(|s| {
                    let mut s = s.clone();
                    s.sort_unstable();
                    s == first
                });
                draws += 1;
            }
            if done {
                break;
            }
        }
        trainer.finish_episode().unwrap();
    }
    exact(
        7,
        identical && aligned && draws > 0 && a.stats.synchronized_draws == a.stats.low_updates,
        &format!(
            "metrics csv identical across reruns: {identical}; {draws} foraging draws aligned across agents: {aligned}"
        ),
    );
}

struct ForagingScores {
    per_seed: Vec<f64>,
    violations: usize,
}

fn foraging_scores(config: &RunConfig, method: Method) -> ForagingScores {
    let mut per_seed = Vec::new();
    let mut violations = 0;
    for &seed in &config.seeds {
        let o = train(config, method, seed).unwrap();
        assert!(o.stats.max_conservation_error <= 1e-9);
        let rewards = o.metrics.average_rewards();
        for (r, b) in rewards.iter().zip(&o.reward_upper_bounds) {
            if *r > b.expect("foraging reports a bound") + 1e-9 {
                violations += 1;
            }
        }
        per_seed.push(final_window_mean(&rewards, FINAL_WINDOW));
    }
    ForagingScores { per_seed, violations }
}

#[test]
fn criterion_8_foraging_ordering() {
    let config = parse_config(&config_path("foraging_desk.cfg")).unwrap();
    let ltos = foraging_scores(&config, Method::Ltos);
    let independent = foraging_scores(&config, Method::Independent);
    let fixed: Vec<(f64, ForagingScores)> = S0_GRID
        .iter()
        .map(|&s0| {
            let c = RunConfig {
                selfishness: s0,
                ..config.clone()
            };
            (s0, foraging_scores(&c, Method::Fixed))
        })
        .collect();
    let (best_s0, best_fixed) = fixed
        .iter()
        .map(|(s0, f)| (*s0, mean(&f.per_seed)))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let violations =
        ltos.violations + independent.violations + fixed.iter().map(|(_, f)| f.violations).sum::<usize>();
    assert_eq!(violations, 0, "scores above the loose upper bound");

    let (l, i) = (mean(&ltos.per_seed), mean(&independent.per_seed));
    let grid: Vec<String> = fixed
        .iter()
        .map(|(s0, f)| format!("{s0}:{:.3}", mean(&f.per_seed)))
        .collect();
    learned(
        8,
        l >= i + 0.05 && l >= best_fixed,
        &format!(
            "per-step reward ltos {l:.3} {} vs independent {i:.3} {}; fixed grid [{}] best s0={best_s0}; \
             all scores within the upper bound",
            fmt(&ltos.per_seed),
            fmt(&independent.per_seed),
            grid.join(", ")
        ),
    );
}

#[test]
fn criterion_9_dilemma_certification() {
    let game = prisoner_payoff_matrix(&PrisonerConfig::default()).unwrap();
    let a = analyze_matrix_game(&game);
    let ok = a.nash == vec![(1, 1)] && a.welfare_optimal == vec![(0, 0)] && a.dilemma;
    exact(
        9,
        ok,
        &format!(
            "nash {:?}, welfare optimum {:?}, dilemma {} (0 = cooperate, 1 = defect)",
            a.nash, a.welfare_optimal, a.dilemma
        ),
    );
}

