use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

pub const METRICS_HEADER: &str = "episode,step,agent,return,reward,selfishness,q_loss";

/// Per-episode, per-agent training record.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub episode: u64,
    /// Environment steps taken so far.
    pub step: u64,
    pub agent: usize,
    /// Greedy evaluation return of the agent's raw rewards.
    pub ret: f64,
    /// Greedy evaluation mean raw reward per step.
    pub reward: f64,
    /// Mean self-loop weight emitted during the training episode.
    pub selfishness: f64,
    /// Mean TD loss of the agent's updates during the training episode.
    pub q_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn n_episodes(&self) -> usize {
        self.rows.last().map_or(0, |r| r.episode as usize + 1)
    }

    fn per_episode(&self, f: impl Fn(&MetricsRow) -> f64) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_episodes()];
        let mut counts = vec![0usize; self.n_episodes()];
        for r in &self.rows {
            sums[r.episode as usize] += f(r);
            counts[r.episode as usize] += 1;
        }
        sums.iter()
            .zip(&counts)
            .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect()
    }

    /// Return averaged over agents, per episode.
    pub fn average_returns(&self) -> Vec<f64> {
        self.per_episode(|r| r.ret)
    }

    /// Per-step reward averaged over agents, per episode.
    pub fn average_rewards(&self) -> Vec<f64> {
        self.per_episode(|r| r.reward)
    }

    pub fn average_selfishness(&self) -> Vec<f64> {
        self.per_episode(|r| r.selfishness)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(METRICS_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.episode, r.step, r.agent, r.ret, r.reward, r.selfishness, r.q_loss
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Mean of the last `fraction` of `values` (at least one element).
pub fn final_window_mean(values: &[f64], fraction: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let n = ((values.len() as f64 * fraction).ceil() as usize).clamp(1, values.len());
    values[values.len() - n..].iter().sum::<f64>() / n as f64
}

/// First episode at which the trailing mean over `window` episodes reaches
/// `threshold`; `None` if it never does.
pub fn episodes_to_threshold(values: &[f64], threshold: f64, window: usize) -> Option<usize> {
    let window = window.max(1);
    if values.len() < window {
        return None;
    }
    let mut sum: f64 = values[..window].iter().sum();
    if sum / window as f64 >= threshold {
        return Some(window - 1);
    }
    for end in window..values.len() {
        sum += values[end] - values[end - window];
        if sum / window as f64 >= threshold {
            return Some(end);
        }
    }
    None
}

/// One step of an episode trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub agent: usize,
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
}

/// `t, agent, obs..., action, reward`.
pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let width = rows.iter().map(|r| r.obs.len()).max().unwrap_or(0);
    let mut out = String::from("t,agent");
    for k in 0..width {
        let _ = write!(out, ",obs{k}");
    }
    out.push_str(",action,reward\n");
    for r in rows {
        let _ = write!(out, "{},{}", r.t, r.agent);
        for k in 0..width {
            let _ = write!(out, ",{}", r.obs.get(k).copied().unwrap_or(0.0));
        }
        let _ = writeln!(out, ",{},{}", r.action, r.reward);
    }
    out
}
