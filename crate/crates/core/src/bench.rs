//! Cost accounting, the offline optimum, and approximate regret.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::FiniteMetric;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub context: usize,
    pub action: usize,
    /// Weighted service cost `ρ·f`.
    pub service: f64,
    /// Movement `d(x_prev, x)`.
    pub movement: f64,
    pub observation: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub x0: usize,
    pub records: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn new(x0: usize) -> Self {
        Self {
            x0,
            records: Vec::new(),
        }
    }

    pub fn service_total(&self) -> f64 {
        self.records.iter().map(|r| r.service).sum()
    }

    pub fn movement_total(&self) -> f64 {
        self.records.iter().map(|r| r.movement).sum()
    }

    pub fn cost(&self) -> f64 {
        self.service_total() + self.movement_total()
    }

    pub fn contexts(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.context).collect()
    }

    pub fn actions(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.action).collect()
    }
}

/// Minimizes `Σ_h cost[e_h][x_h] + d(x_{h−1}, x_h)` from `x0` by dynamic
/// programming over (step, action). Ties go to the lowest action index.
pub fn offline_optimal(
    metric: &FiniteMetric,
    cost: &[Vec<f64>],
    contexts: &[usize],
    x0: usize,
) -> Result<(Vec<usize>, f64)> {
    let n = metric.len();
    if x0 >= n {
        return Err(Error::domain(format!("start {x0} out of range for {n} actions")));
    }
    for &e in contexts {
        let row = cost
            .get(e)
            .ok_or_else(|| Error::input(format!("no cost entries for context {e}")))?;
        if row.len() != n || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(format!("incomplete cost entries for context {e}")));
        }
    }
    if contexts.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    let h = contexts.len();
    let mut value: Vec<f64> = (0..n).map(|x| metric.dist(x0, x) + cost[contexts[0]][x]).collect();
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(h);
    back.push(vec![x0 as u32; n]);
    let mut next = vec![0.0; n];
    for &e in &contexts[1..] {
        let mut arg = vec![0u32; n];
        for x in 0..n {
            let mut best = f64::INFINITY;
            let mut who = 0;
            for (y, &vy) in value.iter().enumerate() {
                let c = vy + metric.dist(y, x);
                if c < best {
                    best = c;
                    who = y;
                }
            }
            next[x] = best + cost[e][x];
            arg[x] = who as u32;
        }
        std::mem::swap(&mut value, &mut next);
        back.push(arg);
    }
    let mut x = 0;
    for (i, &v) in value.iter().enumerate() {
        if v < value[x] {
            x = i;
        }
    }
    let total = value[x];
    let mut seq = vec![0; h];
    for step in (0..h).rev() {
        seq[step] = x;
        x = back[step][x] as usize;
    }
    Ok((seq, total))
}

/// `Σ_h cost[e_h][x_h] + d(x_{h−1}, x_h)` of a given sequence.
pub fn sequence_cost(metric: &FiniteMetric, cost: &[Vec<f64>], contexts: &[usize], x0: usize, seq: &[usize]) -> f64 {
    let mut prev = x0;
    let mut total = 0.0;
    for (&e, &x) in contexts.iter().zip(seq) {
        total += cost[e][x] + metric.dist(prev, x);
        prev = x;
    }
    total
}

/// Offline optimum against clamped lower confidence bounds, the benchmark the
/// learner would face if its optimistic costs were true.
pub fn hallucinated_optimum(
    metric: &FiniteMetric,
    lcb: &[Vec<f64>],
    contexts: &[usize],
    x0: usize,
) -> Result<(Vec<usize>, f64)> {
    let clamped: Vec<Vec<f64>> = lcb
        .iter()
        .map(|r| r.iter().map(|v| v.max(0.0)).collect())
        .collect();
    offline_optimal(metric, &clamped, contexts, x0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub alpha: f64,
    pub beta: f64,
    pub costs: Vec<f64>,
    pub optimal: Vec<f64>,
    /// `r_m = cost_m − α·opt_m − β`.
    pub per_episode: Vec<f64>,
    /// Running sums `R_m`.
    pub cumulative: Vec<f64>,
    /// `R_m / m`.
    pub average: Vec<f64>,
    pub total: f64,
}

pub fn regret(logs: &[EpisodeLog], optimal: &[f64], alpha: f64, beta: f64) -> Result<RegretReport> {
    if logs.len() != optimal.len() {
        return Err(Error::input(format!(
            "{} episode logs but {} optimal costs",
            logs.len(),
            optimal.len()
        )));
    }
    let costs: Vec<f64> = logs.iter().map(EpisodeLog::cost).collect();
    Ok(regret_from_costs(&costs, optimal, alpha, beta))
}

pub fn regret_from_costs(costs: &[f64], optimal: &[f64], alpha: f64, beta: f64) -> RegretReport {
    let per_episode: Vec<f64> = costs
        .iter()
        .zip(optimal)
        .map(|(c, o)| c - alpha * o - beta)
        .collect();
    let mut cumulative = Vec::with_capacity(per_episode.len());
    let mut run = 0.0;
    for r in &per_episode {
        run += r;
        cumulative.push(run);
    }
    let average = cumulative
        .iter()
        .enumerate()
        .map(|(m, r)| r / (m + 1) as f64)
        .collect();
    RegretReport {
        alpha,
        beta,
        costs: costs.to_vec(),
        optimal: optimal.to_vec(),
        per_episode,
        total: run,
        cumulative,
        average,
    }
}

/// Trailing moving average with the given window (shorter at the start).
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            series[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}
