//! Entropic potential on the children of a vertex, its Bregman divergence,
//! and the exact mirror-descent step.
//!
//! For a vertex `u` with children `ν` the potential is
//! `Φ(q) = (1/κ) Σ (w_ν/η_ν)(q_ν + δ_ν) ln(q_ν + δ_ν)`. The step minimizes
//! `D(p ‖ q_prev) + ⟨p, c⟩` over the child simplex. Its KKT conditions give
//! `p_ν = (q_ν + δ_ν)·exp(s_ν(β - c_ν + α_ν)) - δ_ν` with `s_ν = κη_ν/w_ν`,
//! a normalization multiplier `β` and non-negativity multipliers `α_ν ≥ 0`,
//! `α_ν p_ν = 0`. For fixed `β` the multipliers project each coordinate onto
//! `p_ν ≥ 0` in closed form; the mass `Σ p_ν(β)` is strictly increasing in
//! `β`, so `β` is found by bisection.

use crate::error::{Error, Result};
use crate::hst::HstTree;

/// Required accuracy of `Σ p = 1` before the final renormalization.
pub const SIMPLEX_TOLERANCE: f64 = 1e-10;
/// Required accuracy of the complementary-slackness residual.
pub const SLACKNESS_TOLERANCE: f64 = 1e-8;
/// Upper bound on bisection iterations for `β`.
pub const MAX_ITERATIONS: usize = 10_000;

/// Per-vertex potential coefficients and the scale `κ ≥ 1`.
#[derive(Clone, Debug)]
pub struct PotentialParams {
    kappa: f64,
    children: Vec<Vec<usize>>,
    weight: Vec<f64>,
    eta: Vec<f64>,
    delta: Vec<f64>,
}

impl PotentialParams {
    /// Coefficients pulled from the tree: edge weights and leaf-count ratios.
    pub fn new(tree: &HstTree, kappa: f64) -> Result<Self> {
        let nv = tree.n_vertices();
        let mut eta = vec![1.0; nv];
        let mut delta = vec![1.0; nv];
        for (v, r) in tree.all_leaf_count_ratios().into_iter().enumerate() {
            if let Some(r) = r {
                eta[v] = r.eta;
                delta[v] = r.delta;
            }
        }
        Self::from_parts(
            kappa,
            (0..nv).map(|v| tree.children(v).to_vec()).collect(),
            tree.weights().to_vec(),
            eta,
            delta,
        )
    }

    /// Arbitrary coefficients over an explicit child structure.
    pub fn from_parts(
        kappa: f64,
        children: Vec<Vec<usize>>,
        weight: Vec<f64>,
        eta: Vec<f64>,
        delta: Vec<f64>,
    ) -> Result<Self> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::parameter(format!("kappa must be at least 1, got {kappa}")));
        }
        let nv = children.len();
        if weight.len() != nv || eta.len() != nv || delta.len() != nv {
            return Err(Error::input("potential coefficient arrays differ in length"));
        }
        for v in children.iter().flatten() {
            let v = *v;
            if v >= nv {
                return Err(Error::input(format!("child {v} out of range")));
            }
            if !(weight[v] >= 0.0) || !(eta[v] > 0.0) || !(delta[v] > 0.0) {
                return Err(Error::input(format!(
                    "vertex {v} needs w ≥ 0 and η, δ > 0"
                )));
            }
        }
        Ok(Self {
            kappa,
            children,
            weight,
            eta,
            delta,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn children(&self, u: usize) -> &[usize] {
        &self.children[u]
    }

    fn check_arity(&self, u: usize, lens: &[usize]) -> Result<&[usize]> {
        let ch = self
            .children
            .get(u)
            .ok_or_else(|| Error::domain(format!("unknown vertex {u}")))?;
        if ch.is_empty() {
            return Err(Error::domain(format!("vertex {u} has no children")));
        }
        if lens.iter().any(|&l| l != ch.len()) {
            return Err(Error::input(format!(
                "vertex {u} has {} children; vector lengths {lens:?}",
                ch.len()
            )));
        }
        Ok(ch)
    }

    /// `D(p ‖ q)` over the children of `u`.
    pub fn bregman(&self, u: usize, p: &[f64], q: &[f64]) -> Result<f64> {
        let ch = self.check_arity(u, &[p.len(), q.len()])?;
        let mut total = 0.0;
        for (k, &v) in ch.iter().enumerate() {
            let d = self.delta[v];
            let a = p[k] + d;
            let b = q[k] + d;
            total += self.weight[v] / self.eta[v] * (a * (a / b).ln() + q[k] - p[k]);
        }
        Ok(total / self.kappa)
    }

    /// `D(p ‖ q_prev) + ⟨p, cost⟩`.
    pub fn md_objective(&self, u: usize, p: &[f64], q_prev: &[f64], cost: &[f64]) -> Result<f64> {
        let div = self.bregman(u, p, q_prev)?;
        Ok(div + p.iter().zip(cost).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Mirror-descent step at `u`; returns the new child distribution.
    pub fn md_update_vertex(&self, u: usize, q_prev: &[f64], cost: &[f64]) -> Result<Vec<f64>> {
        self.md_update_vertex_detailed(u, q_prev, cost).map(|s| s.q)
    }

    /// Mirror-descent step with its KKT certificate.
    pub fn md_update_vertex_detailed(
        &self,
        u: usize,
        q_prev: &[f64],
        cost: &[f64],
    ) -> Result<VertexSolution> {
        let ch = self.check_arity(u, &[q_prev.len(), cost.len()])?;
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::input(format!("non-finite cost below vertex {u}")));
        }
        let k = ch.len();
        if k == 1 {
            return Ok(VertexSolution {
                q: vec![1.0],
                beta: cost[0],
                alpha: vec![0.0],
                simplex_residual: 0.0,
                slackness_residual: 0.0,
                iterations: 0,
            });
        }
        let zero_weight = ch.iter().filter(|&&v| self.weight[v] == 0.0).count();
        if zero_weight == k {
            return Ok(zero_weight_step(q_prev, cost));
        }
        if zero_weight > 0 {
            return Err(Error::domain(format!(
                "vertex {u} mixes zero- and positive-weight children"
            )));
        }

        let c_min = cost.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: Vec<f64> = cost.iter().map(|c| c - c_min).collect();
        let scale: Vec<f64> = ch
            .iter()
            .map(|&v| self.kappa * self.eta[v] / self.weight[v])
            .collect();
        let base: Vec<f64> = ch
            .iter()
            .zip(q_prev)
            .map(|(&v, &q)| q.max(0.0) + self.delta[v])
            .collect();
        let deltas: Vec<f64> = ch.iter().map(|&v| self.delta[v]).collect();
        let eval = |beta: f64, out: &mut [f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..k {
                let v = (base[i] * (scale[i] * (beta - shifted[i])).exp() - deltas[i]).max(0.0);
                out[i] = v;
                s += v;
            }
            s
        };

        // Σp(0) ≤ Σq_prev = 1; the cheapest child alone reaches 1 at `hi`.
        let i0 = shifted
            .iter()
            .position(|&c| c == 0.0)
            .expect("minimum attained");
        let mut lo = 0.0f64;
        let mut hi = ((1.0 + deltas[i0]) / base[i0]).ln().max(0.0) / scale[i0];
        let mut p = vec![0.0; k];
        let mut iterations = 0;
        let mut mass = eval(hi, &mut p);
        if (mass - 1.0).abs() > SIMPLEX_TOLERANCE {
            while iterations < MAX_ITERATIONS {
                iterations += 1;
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                mass = eval(mid, &mut p);
                if (mass - 1.0).abs() <= SIMPLEX_TOLERANCE * 1e-3 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if mass < 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let beta = 0.5 * (lo + hi);
            mass = eval(beta, &mut p);
            lo = beta;
        } else {
            lo = hi;
        }
        let beta = lo;
        let simplex_residual = (mass - 1.0).abs();
        if !(simplex_residual <= SIMPLEX_TOLERANCE) {
            return Err(Error::numerical(
                format!("mirror-descent step at vertex {u} did not converge after {iterations} iterations"),
                simplex_residual,
            ));
        }
        for v in &mut p {
            *v /= mass;
        }

        // KKT multipliers: α_ν = 0 on the support; off it, the value that
        // makes the stationarity condition hold at p_ν = 0.
        let mut alpha = vec![0.0; k];
        let mut slackness_residual = 0.0f64;
        for i in 0..k {
            if p[i] == 0.0 {
                alpha[i] = shifted[i] - beta + (deltas[i] / base[i]).ln() / scale[i];
                slackness_residual = slackness_residual.max((-alpha[i]).max(0.0));
            } else {
                slackness_residual = slackness_residual.max((alpha[i] * p[i]).abs());
            }
        }
        if slackness_residual > SLACKNESS_TOLERANCE {
            return Err(Error::numerical(
                format!("KKT multipliers at vertex {u} violate complementary slackness"),
                slackness_residual,
            ));
        }
        Ok(VertexSolution {
            q: p,
            beta: beta + c_min,
            alpha,
            simplex_residual,
            slackness_residual,
            iterations,
        })
    }

    /// The same step solved iteratively: projected gradient ascent on the
    /// dual multipliers `α ≥ 0`, with `β` re-solved by bisection after every
    /// move. Each coordinate takes the step that would zero `p_ν` at the
    /// current `β`, then is projected onto `α_ν ≥ 0`. Slower than [`Self::md_update_vertex_detailed`]
    /// and kept as an independent check on it.
    pub fn md_update_vertex_projected(
        &self,
        u: usize,
        q_prev: &[f64],
        cost: &[f64],
    ) -> Result<VertexSolution> {
        let ch = self.check_arity(u, &[q_prev.len(), cost.len()])?;
        if ch.len() == 1 || ch.iter().any(|&v| self.weight[v] == 0.0) {
            return self.md_update_vertex_detailed(u, q_prev, cost);
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::input(format!("non-finite cost below vertex {u}")));
        }
        let k = ch.len();
        let c_min = cost.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: Vec<f64> = cost.iter().map(|c| c - c_min).collect();
        let scale: Vec<f64> = ch.iter().map(|&v| self.kappa * self.eta[v] / self.weight[v]).collect();
        let base: Vec<f64> = ch.iter().zip(q_prev).map(|(&v, &q)| q.max(0.0) + self.delta[v]).collect();
        let deltas: Vec<f64> = ch.iter().map(|&v| self.delta[v]).collect();
        // unclamped primal point for given multipliers
        let primal = |beta: f64, alpha: &[f64], out: &mut [f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..k {
                out[i] = base[i] * (scale[i] * (beta - shifted[i] + alpha[i])).exp() - deltas[i];
                s += out[i];
            }
            s
        };
        let solve_beta = |alpha: &[f64], out: &mut [f64]| -> f64 {
            let (mut lo, mut hi) = (-1.0f64, 1.0f64);
            while primal(lo, alpha, out) > 1.0 {
                lo *= 2.0;
            }
            while primal(hi, alpha, out) < 1.0 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if primal(mid, alpha, out) < 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let beta = 0.5 * (lo + hi);
            primal(beta, alpha, out);
            beta
        };

        let mut alpha = vec![0.0; k];
        let mut p = vec![0.0; k];
        let mut beta = solve_beta(&alpha, &mut p);
        let mut iterations = 0;
        let mut slackness_residual = f64::INFINITY;
        while iterations < MAX_ITERATIONS {
            slackness_residual = (0..k)
                .map(|i| (-p[i]).max(0.0).max((alpha[i] * p[i]).abs()))
                .fold(0.0, f64::max);
            if slackness_residual <= SIMPLEX_TOLERANCE * 1e-2 {
                break;
            }
            iterations += 1;
            for i in 0..k {
                // gradient step in the log domain of p_ν + δ_ν, which cannot underflow
                let log_mass = base[i].ln() + scale[i] * (beta - shifted[i] + alpha[i]);
                alpha[i] = (alpha[i] + (deltas[i].ln() - log_mass) / scale[i]).max(0.0);
            }
            beta = solve_beta(&alpha, &mut p);
        }
        if slackness_residual > SLACKNESS_TOLERANCE {
            return Err(Error::numerical(
                format!("projected gradient at vertex {u} did not converge after {iterations} iterations"),
                slackness_residual,
            ));
        }
        for v in &mut p {
            *v = v.max(0.0);
        }
        let mass: f64 = p.iter().sum();
        let simplex_residual = (mass - 1.0).abs();
        if !(simplex_residual <= SIMPLEX_TOLERANCE) {
            return Err(Error::numerical(
                format!("projected gradient at vertex {u} left mass {mass}"),
                simplex_residual,
            ));
        }
        for v in &mut p {
            *v /= mass;
        }
        Ok(VertexSolution {
            q: p,
            beta: beta + c_min,
            alpha,
            simplex_residual,
            slackness_residual,
            iterations,
        })
    }
}

/// Zero-weight children cost nothing to move between: all mass goes to the
/// cheapest children, split in proportion to their previous mass (uniformly
/// when they had none).
fn zero_weight_step(q_prev: &[f64], cost: &[f64]) -> VertexSolution {
    let c_min = cost.iter().copied().fold(f64::INFINITY, f64::min);
    let cheapest: Vec<bool> = cost.iter().map(|&c| c == c_min).collect();
    let mass: f64 = q_prev
        .iter()
        .zip(&cheapest)
        .filter(|(_, &m)| m)
        .map(|(q, _)| q.max(0.0))
        .sum();
    let count = cheapest.iter().filter(|&&m| m).count() as f64;
    let q = q_prev
        .iter()
        .zip(&cheapest)
        .map(|(&q, &m)| match (m, mass > 0.0) {
            (false, _) => 0.0,
            (true, true) => q.max(0.0) / mass,
            (true, false) => 1.0 / count,
        })
        .collect();
    VertexSolution {
        q,
        beta: c_min,
        alpha: cost.iter().map(|c| c - c_min).collect(),
        simplex_residual: 0.0,
        slackness_residual: 0.0,
        iterations: 0,
    }
}

/// Solution of one vertex step together with its KKT certificate.
#[derive(Clone, Debug)]
pub struct VertexSolution {
    pub q: Vec<f64>,
    /// Normalization multiplier, in the units of the costs.
    pub beta: f64,
    /// Non-negativity multipliers.
    pub alpha: Vec<f64>,
    pub simplex_residual: f64,
    pub slackness_residual: f64,
    pub iterations: usize,
}
