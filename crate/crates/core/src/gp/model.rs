use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::kernel::{AffineMap, Kernel};
use crate::error::{Error, Result};

/// Negative predictive variances down to `-VARIANCE_CLAMP · max(1, k(x,x))`
/// are treated as round-off and clamped to zero.
pub const VARIANCE_CLAMP: f64 = 1e-12;

/// The factor is rebuilt from scratch every this many points.
pub const REFACTOR_EVERY: usize = 256;

static LINEAGE: AtomicU64 = AtomicU64::new(1);

/// How the confidence width `β_t` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BetaSchedule {
    /// `σ/√λ · √(2 ln(1/δ) + 2γ_t) + B` with the realized information gain
    /// standing in for `γ_t`.
    Theory,
    Constant { value: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Constant { value: 2.0 }
    }
}

/// Hyperparameters of a GP surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub kernel: Kernel,
    #[serde(default)]
    pub normalization: Option<AffineMap>,
    /// Regularization `λ` added to the kernel diagonal.
    pub lam: f64,
    /// Standard deviation `σ` of the observation noise.
    pub noise_sigma: f64,
    /// RKHS norm bound `B`.
    #[serde(default = "default_rkhs_bound")]
    pub rkhs_bound: f64,
    /// Confidence parameter `δ ∈ (0, 1]`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub prior_mean: f64,
}

fn default_rkhs_bound() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.1
}

impl GpConfig {
    /// λ defaults to the noise variance.
    pub fn new(kernel: Kernel, noise_sigma: f64) -> Self {
        Self {
            kernel,
            normalization: None,
            lam: noise_sigma * noise_sigma,
            noise_sigma,
            rkhs_bound: default_rkhs_bound(),
            delta: default_delta(),
            prior_mean: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.lam > 0.0) || !self.lam.is_finite() {
            return Err(Error::parameter("lambda must be positive"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::parameter("noise sigma must be non-negative"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::parameter("delta must lie in (0, 1]"));
        }
        if !(self.rkhs_bound >= 0.0) || !self.prior_mean.is_finite() {
            return Err(Error::parameter("invalid RKHS bound or prior mean"));
        }
        Ok(())
    }
}

/// Exact GP regression with an incrementally bordered Cholesky factor of
/// `K_t + λI`.
#[derive(Clone, Debug)]
pub struct GpModel {
    config: GpConfig,
    raw_inputs: Vec<Vec<f64>>,
    inputs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    /// Row `i` holds `L[i][0..=i]`.
    chol: Vec<Vec<f64>>,
    /// `L⁻¹ (y - m)`.
    whitened: Vec<f64>,
    log_diag_sum: f64,
    lineage: u64,
    epoch: u64,
}

impl GpModel {
    pub fn new(config: GpConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            raw_inputs: Vec::new(),
            inputs: Vec::new(),
            ys: Vec::new(),
            chol: Vec::new(),
            whitened: Vec::new(),
            log_diag_sum: 0.0,
            lineage: LINEAGE.fetch_add(1, Ordering::Relaxed),
            epoch: 0,
        })
    }

    pub fn config(&self) -> &GpConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// Observed inputs after normalization.
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn observations(&self) -> &[f64] {
        &self.ys
    }

    pub fn cholesky_row(&self, i: usize) -> &[f64] {
        &self.chol[i]
    }

    pub(crate) fn whitened(&self) -> &[f64] {
        &self.whitened
    }

    /// Identifies the factor a cache was built against: the model lineage
    /// and the number of full refactorizations so far.
    pub(crate) fn factor_id(&self) -> (u64, u64) {
        (self.lineage, self.epoch)
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        match &self.config.normalization {
            Some(map) => map.apply(x),
            None => x.to_vec(),
        }
    }

    /// Kernel on already-normalized inputs.
    #[inline]
    pub fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        self.config.kernel.eval(a, b)
    }

    /// Appends one observation.
    pub fn add(&mut self, x: &[f64], y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::input(format!("non-finite observation {y}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite input"));
        }
        let xn = self.normalize(x);
        let kvec: Vec<f64> = self.inputs.iter().map(|xi| self.k(xi, &xn)).collect();
        let row = forward_solve(&self.chol, &kvec);
        let diag_sq = self.k(&xn, &xn) + self.config.lam - dot(&row, &row);
        if !(diag_sq > 0.0) {
            return Err(Error::numerical(
                "kernel matrix lost positive definiteness while adding a point",
                diag_sq,
            ));
        }
        let diag = diag_sq.sqrt();
        let resid = y - self.config.prior_mean - dot(&row, &self.whitened);
        self.whitened.push(resid / diag);
        self.log_diag_sum += diag.ln();
        let mut full_row = row;
        full_row.push(diag);
        self.chol.push(full_row);
        self.raw_inputs.push(x.to_vec());
        self.inputs.push(xn);
        self.ys.push(y);
        if self.len() % REFACTOR_EVERY == 0 {
            self.refactor()?;
        }
        Ok(())
    }

    /// Incorporates a batch of `(input, observation)` pairs in order.
    pub fn update<'a, I>(&mut self, batch: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        for (x, y) in batch {
            self.add(x, y)?;
        }
        Ok(())
    }

    /// Copy of the model with `batch` appended; `self` is untouched.
    pub fn updated<'a, I>(&self, batch: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        let mut next = self.clone();
        next.lineage = LINEAGE.fetch_add(1, Ordering::Relaxed);
        next.update(batch)?;
        Ok(next)
    }

    /// Recomputes the factor and whitened targets from the stored data.
    pub fn refactor(&mut self) -> Result<()> {
        let t = self.len();
        let mut chol: Vec<Vec<f64>> = Vec::with_capacity(t);
        let mut whitened = Vec::with_capacity(t);
        let mut log_diag_sum = 0.0;
        for i in 0..t {
            let mut row = vec![0.0; i + 1];
            for j in 0..i {
                let mut s = self.k(&self.inputs[i], &self.inputs[j]);
                s -= dot(&row[..j], &chol[j][..j]);
                row[j] = s / chol[j][j];
            }
            let diag_sq = self.k(&self.inputs[i], &self.inputs[i]) + self.config.lam
                - dot(&row[..i], &row[..i]);
            if !(diag_sq > 0.0) {
                return Err(Error::numerical("refactorization failed", diag_sq));
            }
            row[i] = diag_sq.sqrt();
            let resid = self.ys[i] - self.config.prior_mean - dot(&row[..i], &whitened);
            whitened.push(resid / row[i]);
            log_diag_sum += row[i].ln();
            chol.push(row);
        }
        self.chol = chol;
        self.whitened = whitened;
        self.log_diag_sum = log_diag_sum;
        self.epoch += 1;
        Ok(())
    }

    /// `L⁻¹ k_t(x)` for an already-normalized input.
    fn project(&self, xn: &[f64]) -> Vec<f64> {
        let kvec: Vec<f64> = self.inputs.iter().map(|xi| self.k(xi, xn)).collect();
        forward_solve(&self.chol, &kvec)
    }

    /// Posterior mean and standard deviation at a raw input.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        let xn = self.normalize(x);
        let v = self.project(&xn);
        let mean = self.config.prior_mean + dot(&v, &self.whitened);
        let prior = self.k(&xn, &xn);
        let var = clamp_variance(prior - dot(&v, &v), prior)?;
        Ok((mean, var.sqrt()))
    }

    /// `(K_t + λI)⁻¹ (Y_t - m)`.
    pub fn alpha(&self) -> Vec<f64> {
        backward_solve(&self.chol, &self.whitened)
    }

    /// `½ log det(I + λ⁻¹ K_t)`.
    pub fn info_gain(&self) -> f64 {
        self.log_diag_sum - 0.5 * self.len() as f64 * self.config.lam.ln()
    }

    /// Confidence width under `schedule`.
    pub fn beta(&self, schedule: BetaSchedule) -> f64 {
        match schedule {
            BetaSchedule::Constant { value } => value,
            BetaSchedule::Theory => self.beta_theory(),
        }
    }

    pub fn beta_theory(&self) -> f64 {
        let c = &self.config;
        let gamma = self.info_gain().max(0.0);
        c.noise_sigma / c.lam.sqrt() * (2.0 * (1.0 / c.delta).ln() + 2.0 * gamma).sqrt()
            + c.rkhs_bound
    }

    /// `μ(x) - β σ(x)`.
    pub fn lcb(&self, x: &[f64], beta: f64) -> Result<f64> {
        let (m, s) = self.posterior(x)?;
        Ok(m - beta * s)
    }

    pub fn snapshot(&self) -> GpSnapshot {
        GpSnapshot {
            config: self.config.clone(),
            inputs: self.raw_inputs.clone(),
            observations: self.ys.clone(),
        }
    }

    /// Rebuilds a model from a snapshot by refactorizing its data.
    pub fn from_snapshot(snapshot: GpSnapshot) -> Result<Self> {
        if snapshot.inputs.len() != snapshot.observations.len() {
            return Err(Error::input("snapshot inputs and observations differ in length"));
        }
        let mut model = Self::new(snapshot.config)?;
        for (x, &y) in snapshot.inputs.iter().zip(&snapshot.observations) {
            if !y.is_finite() {
                return Err(Error::input("non-finite observation in snapshot"));
            }
            model.inputs.push(model.normalize(x));
            model.raw_inputs.push(x.clone());
            model.ys.push(y);
        }
        model.refactor()?;
        Ok(model)
    }
}

/// Serializable model state for resuming runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSnapshot {
    pub config: GpConfig,
    pub inputs: Vec<Vec<f64>>,
    pub observations: Vec<f64>,
}

pub(crate) fn clamp_variance(var: f64, prior: f64) -> Result<f64> {
    if var >= 0.0 {
        Ok(var)
    } else if var >= -VARIANCE_CLAMP * prior.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::numerical("negative predictive variance", var))
    }
}

/// Inner product with eight independent accumulators, which lets the compiler
/// vectorize the loop.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7])) + tail
}

fn forward_solve(chol: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rhs.len());
    for (i, row) in chol.iter().enumerate() {
        let s = rhs[i] - dot(&row[..i], &out);
        out.push(s / row[i]);
    }
    out
}

fn backward_solve(chol: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let t = rhs.len();
    let mut out = vec![0.0; t];
    for i in (0..t).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..t {
            s -= chol[j][i] * out[j];
        }
        out[i] = s / chol[i][i];
    }
    out
}
