//! Online policies choosing one action per step, and their shared interface.

mod learner;
mod md;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use learner::{CostModel, ExactCost, GpCost, Link};
pub use md::MirrorDescent;

use crate::error::{Error, Result};
use crate::gp::{BetaSchedule, GpConfig};
use crate::hst::HstTree;
use crate::rng::Rng;
use crate::task::Task;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "gp-md")]
    GpMd,
    #[serde(rename = "cgp-lcb")]
    CgpLcb,
    #[serde(rename = "md-known")]
    MdKnown,
    #[serde(rename = "minc-known")]
    MincKnown,
    #[serde(rename = "stationary")]
    Stationary,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::GpMd,
        PolicyKind::CgpLcb,
        PolicyKind::MdKnown,
        PolicyKind::MincKnown,
        PolicyKind::Stationary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::GpMd => "gp-md",
            PolicyKind::CgpLcb => "cgp-lcb",
            PolicyKind::MdKnown => "md-known",
            PolicyKind::MincKnown => "minc-known",
            PolicyKind::Stationary => "stationary",
        }
    }

    pub fn uses_tree(self) -> bool {
        matches!(self, PolicyKind::GpMd | PolicyKind::MdKnown)
    }

    pub fn learns(self) -> bool {
        matches!(self, PolicyKind::GpMd | PolicyKind::CgpLcb)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::parameter(format!("unknown policy {s:?}")))
    }
}

/// When buffered observations reach the learner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    PerEpisode,
    #[default]
    PerStep,
}

impl FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "per-episode" | "episode" => Ok(UpdateMode::PerEpisode),
            "per-step" | "step" => Ok(UpdateMode::PerStep),
            _ => Err(Error::parameter(format!("unknown update mode {s:?}"))),
        }
    }
}

/// Internal quantities of the last decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Expected leaf cost under the new distribution (root vertex cost).
    pub hallucinated_cost: Option<f64>,
    /// Tree transport cost between consecutive distributions.
    pub tree_step: Option<f64>,
}

/// What happened at one step, as seen by the environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub action: usize,
    /// `ρ·f(x, e)`.
    pub service_true: f64,
    /// `d(x_prev, x)`.
    pub movement_true: f64,
    pub observation: f64,
    pub diagnostics: StepDiagnostics,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    /// Resets the per-episode state to the deterministic start `x0`.
    fn begin_episode(&mut self, x0: usize) -> Result<()>;

    fn act(&mut self, context: usize, rng: &mut Rng) -> Result<usize>;

    fn observe(&mut self, action: usize, context: usize, y: f64) -> Result<()>;

    /// Flushes observations buffered during the episode.
    fn end_episode(&mut self) -> Result<()>;

    /// Current action distribution, for randomized policies.
    fn leaf_distribution(&self) -> Option<&[f64]> {
        None
    }

    fn diagnostics(&self) -> StepDiagnostics {
        StepDiagnostics::default()
    }
}

fn check_start(task: &Task, x0: usize) -> Result<()> {
    if x0 >= task.n_actions() {
        return Err(Error::domain(format!(
            "start {x0} out of range for {} actions",
            task.n_actions()
        )));
    }
    Ok(())
}

/// Plays the start action forever.
pub struct Stationary {
    task: Arc<Task>,
    x0: Option<usize>,
}

impl Stationary {
    pub fn new(task: Arc<Task>) -> Self {
        Self { task, x0: None }
    }
}

impl Policy for Stationary {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Stationary
    }

    fn begin_episode(&mut self, x0: usize) -> Result<()> {
        check_start(&self.task, x0)?;
        self.x0 = Some(x0);
        Ok(())
    }

    fn act(&mut self, _context: usize, _rng: &mut Rng) -> Result<usize> {
        self.x0.ok_or_else(|| Error::domain("episode not started"))
    }

    fn observe(&mut self, _action: usize, _context: usize, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::input("non-finite observation"));
        }
        Ok(())
    }

    fn end_episode(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Plays the minimizer of the current cost estimate, ignoring movement.
pub struct Greedy<M: CostModel> {
    kind: PolicyKind,
    task: Arc<Task>,
    model: M,
    update_mode: UpdateMode,
    started: bool,
}

impl<M: CostModel> Greedy<M> {
    pub fn new(kind: PolicyKind, task: Arc<Task>, model: M, update_mode: UpdateMode) -> Self {
        Self {
            kind,
            task,
            model,
            update_mode,
            started: false,
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

/// Index of the smallest entry; the lowest index wins ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

impl<M: CostModel> Policy for Greedy<M> {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn begin_episode(&mut self, x0: usize) -> Result<()> {
        check_start(&self.task, x0)?;
        self.started = true;
        Ok(())
    }

    fn act(&mut self, context: usize, _rng: &mut Rng) -> Result<usize> {
        if !self.started {
            return Err(Error::domain("episode not started"));
        }
        Ok(argmin(&self.model.lower_bounds(context)?))
    }

    fn observe(&mut self, action: usize, context: usize, y: f64) -> Result<()> {
        self.model.record(action, context, y)?;
        if self.update_mode == UpdateMode::PerStep {
            self.model.flush()?;
        }
        Ok(())
    }

    fn end_episode(&mut self) -> Result<()> {
        self.model.flush()
    }
}

/// Everything needed to instantiate any policy kind on a task.
#[derive(Clone, Debug)]
pub struct PolicySetup {
    /// Weight `ρ` on the service cost.
    pub rho: f64,
    pub kappa: f64,
    pub update_mode: UpdateMode,
    pub gp: GpConfig,
    pub beta: BetaSchedule,
    pub link: Link,
}

pub fn build_policy(
    kind: PolicyKind,
    task: Arc<Task>,
    tree: Option<Arc<HstTree>>,
    setup: &PolicySetup,
) -> Result<Box<dyn Policy>> {
    let need_tree = || {
        tree.clone()
            .ok_or_else(|| Error::parameter(format!("{kind} needs a tree embedding")))
    };
    Ok(match kind {
        PolicyKind::Stationary => Box::new(Stationary::new(task)),
        PolicyKind::MincKnown => Box::new(Greedy::new(
            kind,
            task.clone(),
            ExactCost::new(task),
            setup.update_mode,
        )),
        PolicyKind::CgpLcb => {
            let model = GpCost::new(task.clone(), setup.gp.clone(), setup.beta, setup.link)?;
            Box::new(Greedy::new(kind, task, model, setup.update_mode))
        }
        PolicyKind::MdKnown => Box::new(MirrorDescent::new(
            kind,
            task.clone(),
            need_tree()?,
            ExactCost::new(task),
            setup.rho,
            setup.kappa,
            setup.update_mode,
        )?),
        PolicyKind::GpMd => {
            let model = GpCost::new(task.clone(), setup.gp.clone(), setup.beta, setup.link)?;
            Box::new(MirrorDescent::new(
                kind,
                task,
                need_tree()?,
                model,
                setup.rho,
                setup.kappa,
                setup.update_mode,
            )?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert_eq!("GP_MD".parse::<PolicyKind>().unwrap(), PolicyKind::GpMd);
        assert!("ucb".parse::<PolicyKind>().is_err());
        assert_eq!("per-episode".parse::<UpdateMode>().unwrap(), UpdateMode::PerEpisode);
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0, 3.0]), 1);
        assert_eq!(argmin(&[0.0]), 0);
    }
}
