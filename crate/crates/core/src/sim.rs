//! Closed-loop simulation of a policy against a task.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bench::{EpisodeLog, StepRecord};
use crate::error::{Error, Result};
use crate::policy::{Policy, StepOutcome};
use crate::rng::Rng;
use crate::task::Task;

/// Coefficients of service and movement in the total cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub service: f64,
    pub movement: f64,
}

impl CostWeights {
    /// `ρ·f + d`.
    pub fn scaled(rho: f64) -> Self {
        Self {
            service: rho,
            movement: 1.0,
        }
    }

    /// `ρ/(1+ρ)·f + 1/(1+ρ)·d`.
    pub fn convex(rho: f64) -> Self {
        Self {
            service: rho / (1.0 + rho),
            movement: 1.0 / (1.0 + rho),
        }
    }

    /// Service weight relative to movement, which is what the policies see.
    pub fn rho(&self) -> f64 {
        self.service / self.movement
    }

    /// `[context][action]` table of weighted service costs.
    pub fn service_table(&self, task: &Task) -> Vec<Vec<f64>> {
        task.service
            .iter()
            .map(|r| r.iter().map(|f| self.service * f).collect())
            .collect()
    }
}

/// Context sequence and standard-normal noise draws of one episode; shared by
/// every policy in a comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodePlan {
    pub contexts: Vec<usize>,
    pub noise: Vec<f64>,
}

impl EpisodePlan {
    /// Contexts drawn uniformly from `0..n_contexts`.
    pub fn uniform(n_contexts: usize, horizon: usize, context_rng: &mut Rng, noise_rng: &mut Rng) -> Self {
        Self {
            contexts: (0..horizon).map(|_| context_rng.random_range(0..n_contexts)).collect(),
            noise: Self::draw_noise(horizon, noise_rng),
        }
    }

    /// A fixed context sequence.
    pub fn replay(contexts: Vec<usize>, noise_rng: &mut Rng) -> Self {
        let noise = Self::draw_noise(contexts.len(), noise_rng);
        Self { contexts, noise }
    }

    fn draw_noise(n: usize, rng: &mut Rng) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }
}

/// Runs one episode from `x0`; `on_step` sees every outcome as it happens.
pub fn run_episode<F>(
    policy: &mut dyn Policy,
    task: &Task,
    plan: &EpisodePlan,
    x0: usize,
    weights: CostWeights,
    rng: &mut Rng,
    mut on_step: F,
) -> Result<EpisodeLog>
where
    F: FnMut(usize, &StepOutcome),
{
    if plan.noise.len() != plan.contexts.len() {
        return Err(Error::input("episode plan has mismatched noise and contexts"));
    }
    if let Some(&e) = plan.contexts.iter().find(|&&e| e >= task.n_contexts()) {
        return Err(Error::domain(format!("unknown context {e}")));
    }
    policy.begin_episode(x0)?;
    let mut log = EpisodeLog::new(x0);
    let mut prev = x0;
    for (h, (&ctx, &xi)) in plan.contexts.iter().zip(&plan.noise).enumerate() {
        let x = policy.act(ctx, rng)?;
        if x >= task.n_actions() {
            return Err(Error::domain(format!("policy chose unknown action {x}")));
        }
        let service = weights.service * task.service[ctx][x];
        let movement = weights.movement * task.metric.dist(prev, x);
        let y = task.signal[ctx][x] + task.noise_sigma * xi;
        policy.observe(x, ctx, y)?;
        let outcome = StepOutcome {
            action: x,
            service_true: service,
            movement_true: movement,
            observation: y,
            diagnostics: policy.diagnostics(),
        };
        on_step(h, &outcome);
        log.records.push(StepRecord {
            context: ctx,
            action: x,
            service,
            movement,
            observation: y,
        });
        prev = x;
    }
    policy.end_episode()?;
    Ok(log)
}

/// Generated energy of an episode on an energy task: `Σ service weight ·
/// offset − cost`.
pub fn generated_energy(task: &Task, log: &EpisodeLog, weights: CostWeights) -> Option<f64> {
    let offset = task.energy_offset.as_ref()?;
    let ceiling: f64 = log.records.iter().map(|r| weights.service * offset[r.context]).sum();
    Some(ceiling - log.cost())
}
