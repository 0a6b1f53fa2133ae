//! A finite problem instance: actions with a movement metric, contexts, and
//! the true service cost of every (context, action) pair.

use crate::error::{Error, Result};
use crate::metric::FiniteMetric;

#[derive(Clone, Debug)]
pub struct Task {
    pub metric: FiniteMetric,
    /// Learner-side features of each action.
    pub action_inputs: Vec<Vec<f64>>,
    /// Learner-side features of each context.
    pub context_inputs: Vec<Vec<f64>>,
    /// True service cost `f`, indexed `[context][action]`.
    pub service: Vec<Vec<f64>>,
    /// Noise-free quantity the learner observes, indexed `[context][action]`.
    pub signal: Vec<Vec<f64>>,
    /// Standard deviation of the observation noise added to `signal`.
    pub noise_sigma: f64,
    /// Per-context energy ceiling `max_x E_S(x, t)` for energy tasks; generated
    /// energy is `Σ ρ·offset − total cost`.
    pub energy_offset: Option<Vec<f64>>,
}

impl Task {
    pub fn validate(&self) -> Result<()> {
        let n = self.metric.len();
        let c = self.context_inputs.len();
        if n == 0 || c == 0 {
            return Err(Error::input("task needs at least one action and one context"));
        }
        if self.action_inputs.len() != n {
            return Err(Error::input("one feature vector per action is required"));
        }
        for (name, table) in [("service", &self.service), ("signal", &self.signal)] {
            if table.len() != c || table.iter().any(|r| r.len() != n) {
                return Err(Error::input(format!("{name} table must be contexts × actions")));
            }
            if table.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("{name} table has non-finite entries")));
            }
        }
        if let Some(o) = &self.energy_offset {
            if o.len() != c {
                return Err(Error::input("energy offset must have one entry per context"));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::input("noise sigma must be non-negative"));
        }
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.metric.len()
    }

    pub fn n_contexts(&self) -> usize {
        self.context_inputs.len()
    }

    /// Joint learner input of `(action, context)`.
    pub fn input(&self, action: usize, context: usize) -> Vec<f64> {
        let mut v = self.action_inputs[action].clone();
        v.extend_from_slice(&self.context_inputs[context]);
        v
    }
}
