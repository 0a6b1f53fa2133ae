//! Energy model of an airborne wind-energy system operated at a chosen
//! altitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, PosteriorGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Rated windspeed `V_r` in m/s.
    pub v_rated: f64,
    pub dt_minutes: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            c1: 0.0579,
            c2: 0.09,
            c3: 0.15,
            v_rated: 12.0,
            dt_minutes: 60.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("energy.c1", self.c1),
            ("energy.c2", self.c2),
            ("energy.c3", self.c3),
            ("energy.v_rated", self.v_rated),
            ("energy.dt_minutes", self.dt_minutes),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Interior stationary point of the cubic branch, `2c₂/(3c₁)`.
    pub fn cubic_minimizer(&self) -> f64 {
        2.0 * self.c2 / (3.0 * self.c1)
    }

    /// Movement energy per metre of altitude change, `c₃V_r²`.
    pub fn move_rate(&self) -> f64 {
        self.c3 * self.v_rated * self.v_rated
    }
}

/// `E_S(v) = (c₁ min(v, V_r)³ − c₂v²)·Δt`.
///
/// `Δt` is folded into the powers before the coefficients are applied, so
/// each coefficient is rounded against one product; for integral speeds and
/// durations those products are exact.
pub fn energy_service(p: &EnergyParams, v: f64) -> f64 {
    let capped = v.min(p.v_rated);
    let dt = p.dt_minutes;
    p.c1 * (capped * capped * capped * dt) - p.c2 * (v * v * dt)
}

/// `E_M(x, x') = c₃V_r²|x − x'|`.
pub fn energy_move(p: &EnergyParams, x: f64, x_prev: f64) -> f64 {
    p.c3 * (p.v_rated * p.v_rated * (x - x_prev).abs())
}

/// `f(x) = max_x' E_S(x') − E_S(x)` for the windspeeds of one timestamp.
pub fn service_objective(p: &EnergyParams, speeds: &[f64]) -> Result<Vec<f64>> {
    if speeds.is_empty() {
        return Err(Error::input("no windspeeds for this timestamp"));
    }
    if let Some(v) = speeds.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::input(format!("invalid windspeed {v}")));
    }
    let es: Vec<f64> = speeds.iter().map(|&v| energy_service(p, v)).collect();
    let best = es.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(es.iter().map(|e| best - e).collect())
}

/// Range of `E_S` over windspeeds in `[lo, hi]`.
///
/// `E_S` is piecewise smooth, so its extrema lie at the endpoints, at
/// `V_r`, or at the stationary point of the cubic branch.
pub fn service_energy_range(p: &EnergyParams, lo: f64, hi: f64) -> (f64, f64) {
    let lo = lo.max(0.0);
    let hi = hi.max(lo);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in [lo, hi, p.v_rated, p.cubic_minimizer()] {
        if v >= lo && v <= hi {
            let e = energy_service(p, v);
            min = min.min(e);
            max = max.max(e);
        }
    }
    (min, max)
}

/// Bounds on the service cost of every altitude given windspeed intervals.
///
/// With `C = max_x ucb_E(x)`: `lcb_f = max(0, C − ucb_E)` and
/// `ucb_f = C − lcb_E`.
pub fn cost_bounds(p: &EnergyParams, intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let ranges: Vec<(f64, f64)> = intervals
        .iter()
        .map(|&(lo, hi)| service_energy_range(p, lo, hi))
        .collect();
    let c = ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    ranges
        .iter()
        .map(|&(emin, emax)| ((c - emax).max(0.0), c - emin))
        .collect()
}

/// Service-cost bounds at every query of `grid` from a windspeed GP.
pub fn propagate_bounds(
    model: &GpModel,
    grid: &mut PosteriorGrid,
    p: &EnergyParams,
    beta: f64,
) -> Result<Vec<(f64, f64)>> {
    let post = grid.posterior(model)?;
    let intervals: Vec<(f64, f64)> = post
        .iter()
        .map(|&(m, s)| ((m - beta * s).max(0.0), (m + beta * s).max(0.0)))
        .collect();
    Ok(cost_bounds(p, &intervals))
}
