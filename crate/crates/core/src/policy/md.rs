use std::sync::Arc;

use super::{check_start, CostModel, Policy, PolicyKind, StepDiagnostics, UpdateMode};
use crate::error::{Error, Result};
use crate::hst::HstTree;
use crate::mts::{delta_inverse, delta_map, md_step, CondState, PotentialParams, TreeState};
use crate::rng::Rng;
use crate::task::Task;
use crate::transport::{optimal_coupling, sample_next, LeafDistribution};

/// Mirror descent on the tree embedding with leaf costs `ρ·max(ℓ, 0)`,
/// where `ℓ` comes from a [`CostModel`]. Actions are sampled from the
/// minimal-distance coupling of consecutive leaf distributions.
pub struct MirrorDescent<M: CostModel> {
    kind: PolicyKind,
    task: Arc<Task>,
    tree: Arc<HstTree>,
    params: PotentialParams,
    model: M,
    rho: f64,
    update_mode: UpdateMode,
    state: Option<EpisodeState>,
    diagnostics: StepDiagnostics,
}

struct EpisodeState {
    q: CondState,
    leaves: LeafDistribution,
    x_prev: usize,
}

impl<M: CostModel> MirrorDescent<M> {
    pub fn new(
        kind: PolicyKind,
        task: Arc<Task>,
        tree: Arc<HstTree>,
        model: M,
        rho: f64,
        kappa: f64,
        update_mode: UpdateMode,
    ) -> Result<Self> {
        if tree.n_leaves() != task.n_actions() {
            return Err(Error::input("tree leaves do not match the actions"));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::parameter(format!("rho must be positive, got {rho}")));
        }
        let params = PotentialParams::new(&tree, kappa)?;
        Ok(Self {
            kind,
            task,
            tree,
            params,
            model,
            rho,
            update_mode,
            state: None,
            diagnostics: StepDiagnostics::default(),
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn conditional_state(&self) -> Option<&CondState> {
        self.state.as_ref().map(|s| &s.q)
    }
}

impl<M: CostModel> Policy for MirrorDescent<M> {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn begin_episode(&mut self, x0: usize) -> Result<()> {
        check_start(&self.task, x0)?;
        let z0 = TreeState::point_mass(&self.tree, x0)?;
        self.state = Some(EpisodeState {
            q: delta_inverse(&self.tree, &z0),
            leaves: LeafDistribution::point_mass(self.task.n_actions(), x0)?,
            x_prev: x0,
        });
        self.diagnostics = StepDiagnostics::default();
        Ok(())
    }

    fn act(&mut self, context: usize, rng: &mut Rng) -> Result<usize> {
        let st = self
            .state
            .as_mut()
            .ok_or_else(|| Error::domain("episode not started"))?;
        let costs: Vec<f64> = self
            .model
            .lower_bounds(context)?
            .into_iter()
            .map(|l| self.rho * l.max(0.0))
            .collect();
        let (q, vertex_costs) = md_step(&self.tree, &self.params, &st.q, &costs)?;
        let z = delta_map(&self.tree, &q);
        let leaves = LeafDistribution::from_state(&self.tree, &z)?;
        let coupling = optimal_coupling(&self.tree, &st.leaves, &leaves)?;
        let x = sample_next(&coupling, st.x_prev, rng);
        self.diagnostics = StepDiagnostics {
            hallucinated_cost: Some(vertex_costs.root_cost(&self.tree)),
            tree_step: Some(coupling.tree_cost(&self.tree)?),
        };
        st.q = q;
        st.leaves = leaves;
        st.x_prev = x;
        Ok(x)
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

    fn leaf_distribution(&self) -> Option<&[f64]> {
        self.state.as_ref().map(|s| s.leaves.as_slice())
    }

    fn diagnostics(&self) -> StepDiagnostics {
        self.diagnostics
    }
}
