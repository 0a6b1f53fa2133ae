use std::collections::HashMap;
use std::sync::Arc;

use crate::energy::{propagate_bounds, EnergyParams};
use crate::error::{Error, Result};
use crate::gp::{BetaSchedule, GpConfig, GpModel, PosteriorGrid};
use crate::task::Task;

/// Source of per-action service-cost estimates for a context.
pub trait CostModel: Send {
    /// Lower confidence bounds on `f(·, context)` for every action.
    fn lower_bounds(&mut self, context: usize) -> Result<Vec<f64>>;

    /// Buffers an observation; it takes effect at the next `flush`.
    fn record(&mut self, action: usize, context: usize, y: f64) -> Result<()>;

    fn flush(&mut self) -> Result<()>;

    /// Number of observations absorbed so far.
    fn data_len(&self) -> usize {
        0
    }
}

/// The true service cost, for the known-cost benchmarks.
pub struct ExactCost {
    task: Arc<Task>,
}

impl ExactCost {
    pub fn new(task: Arc<Task>) -> Self {
        Self { task }
    }
}

impl CostModel for ExactCost {
    fn lower_bounds(&mut self, context: usize) -> Result<Vec<f64>> {
        self.task
            .service
            .get(context)
            .cloned()
            .ok_or_else(|| Error::domain(format!("unknown context {context}")))
    }

    fn record(&mut self, _action: usize, _context: usize, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::input("non-finite observation"));
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        Ok(())
    }
}

/// How the learned quantity relates to the service cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Link {
    /// The GP models `f` directly.
    Identity,
    /// The GP models windspeed; cost bounds come from the energy model.
    Energy(EnergyParams),
}

/// GP confidence bounds, with posterior caches per distinct context input.
pub struct GpCost {
    task: Arc<Task>,
    model: GpModel,
    beta: BetaSchedule,
    link: Link,
    grids: HashMap<Vec<u64>, PosteriorGrid>,
    pending: Vec<(Vec<f64>, f64)>,
}

impl GpCost {
    pub fn new(task: Arc<Task>, config: GpConfig, beta: BetaSchedule, link: Link) -> Result<Self> {
        Ok(Self {
            task,
            model: GpModel::new(config)?,
            beta,
            link,
            grids: HashMap::new(),
            pending: Vec::new(),
        })
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    /// Absorbs data directly, bypassing the buffer.
    pub fn preload<'a, I>(&mut self, batch: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        self.model.update(batch)
    }
}

impl CostModel for GpCost {
    fn lower_bounds(&mut self, context: usize) -> Result<Vec<f64>> {
        let ctx = self
            .task
            .context_inputs
            .get(context)
            .ok_or_else(|| Error::domain(format!("unknown context {context}")))?;
        let key: Vec<u64> = ctx.iter().map(|v| v.to_bits()).collect();
        let task = &self.task;
        let model = &self.model;
        let grid = self.grids.entry(key).or_insert_with(|| {
            let queries: Vec<Vec<f64>> = (0..task.n_actions()).map(|a| task.input(a, context)).collect();
            PosteriorGrid::new(model, &queries)
        });
        let beta = model.beta(self.beta);
        match self.link {
            Link::Identity => Ok(grid
                .posterior(model)?
                .into_iter()
                .map(|(m, s)| m - beta * s)
                .collect()),
            Link::Energy(p) => Ok(propagate_bounds(model, grid, &p, beta)?
                .into_iter()
                .map(|b| b.0)
                .collect()),
        }
    }

    fn record(&mut self, action: usize, context: usize, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::input("non-finite observation"));
        }
        if action >= self.task.n_actions() || context >= self.task.n_contexts() {
            return Err(Error::domain(format!("unknown (action, context) = ({action}, {context})")));
        }
        self.pending.push((self.task.input(action, context), y));
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let batch = std::mem::take(&mut self.pending);
        self.model.update(batch.iter().map(|(x, y)| (x.as_slice(), *y)))
    }

    fn data_len(&self) -> usize {
        self.model.len()
    }
}
