//! Altitude control of an airborne wind-energy system as a task: actions are
//! altitudes, contexts are timestamps, and the learner models windspeed over
//! (altitude, hour of day).

use serde::{Deserialize, Serialize};

use crate::energy::{energy_move, energy_service, service_objective, EnergyParams};
use crate::error::Result;
use crate::gp::{AffineMap, GpConfig, Kernel};
use crate::metric::FiniteMetric;
use crate::task::Task;
use crate::wind::WindTable;

/// Windspeed GP hyperparameters, on standardized (altitude, hour) inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindGpParams {
    pub lengthscale: f64,
    /// Kernel variance.
    pub outputscale: f64,
    /// Noise variance, used as the regularization `λ`.
    pub noise: f64,
    pub prior_mean: f64,
}

impl Default for WindGpParams {
    fn default() -> Self {
        Self {
            lengthscale: 3.67,
            outputscale: 6.85,
            noise: 2.73,
            prior_mean: 0.0,
        }
    }
}

/// Builds the task: `d` is the movement energy, `f` the service objective,
/// and the learner observes the windspeed itself.
pub fn wind_task(table: &WindTable, params: &EnergyParams) -> Result<Task> {
    params.validate()?;
    let alts = table.altitudes();
    let dist: Vec<Vec<f64>> = alts
        .iter()
        .map(|&a| alts.iter().map(|&b| energy_move(params, a, b)).collect())
        .collect();
    let metric = FiniteMetric::from_matrix(dist)?;
    let mut service = Vec::with_capacity(table.n_times());
    let mut offset = Vec::with_capacity(table.n_times());
    for t in 0..table.n_times() {
        let v = table.speeds_at(t);
        service.push(service_objective(params, v)?);
        offset.push(v.iter().map(|&s| energy_service(params, s)).fold(f64::NEG_INFINITY, f64::max));
    }
    let task = Task {
        metric,
        action_inputs: alts.iter().map(|&a| vec![a]).collect(),
        context_inputs: (0..table.n_times()).map(|t| vec![table.hour(t)]).collect(),
        service,
        signal: (0..table.n_times()).map(|t| table.speeds_at(t).to_vec()).collect(),
        noise_sigma: 0.0,
        energy_offset: Some(offset),
    };
    task.validate()?;
    Ok(task)
}

/// GP over windspeed with inputs standardized across altitudes × hours.
pub fn wind_gp_config(table: &WindTable, gp: &WindGpParams) -> Result<GpConfig> {
    let mut samples = Vec::with_capacity(table.altitudes().len() * 24);
    for &a in table.altitudes() {
        for h in 0..24 {
            samples.push(vec![a, h as f64]);
        }
    }
    let mut config = GpConfig::new(
        Kernel::squared_exponential(gp.lengthscale, gp.outputscale),
        gp.noise.sqrt(),
    );
    config.lam = gp.noise;
    config.normalization = Some(AffineMap::standardizing(&samples)?);
    config.prior_mean = gp.prior_mean;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wind::WindGenerator;

    #[test]
    fn task_shapes_and_offsets() {
        let g = WindGenerator {
            hours: 30,
            ..WindGenerator::default()
        };
        let table = g.generate(1).unwrap();
        let p = EnergyParams::default();
        let task = wind_task(&table, &p).unwrap();
        assert_eq!(task.n_actions(), 25);
        assert_eq!(task.n_contexts(), 30);
        assert_eq!(task.metric.dist(0, 1), energy_move(&p, 10.0, table.altitudes()[1]));
        let off = task.energy_offset.as_ref().unwrap();
        for t in 0..30 {
            assert!(task.service[t].iter().any(|&f| f == 0.0));
            for a in 0..25 {
                let es = energy_service(&p, table.speed(t, a));
                assert!((off[t] - task.service[t][a] - es).abs() < 1e-9);
            }
        }
        let cfg = wind_gp_config(&table, &WindGpParams::default()).unwrap();
        assert_eq!(cfg.lam, 2.73);
    }
}
