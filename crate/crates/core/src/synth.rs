//! Synthetic instances: service costs sampled jointly from a GP over an
//! action grid and a set of scalar contexts.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpConfig, Kernel};
use crate::metric::FiniteMetric;
use crate::rng::{self, Rng, Stream};
use crate::task::Task;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    /// Actions form a `side × side` grid on the unit square.
    pub side: usize,
    pub n_contexts: usize,
    pub lengthscale: f64,
    /// Observation noise as a fraction of the range of `f`.
    pub noise_fraction: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            side: 20,
            n_contexts: 40,
            lengthscale: 0.2,
            noise_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthInstance {
    pub metric: FiniteMetric,
    pub contexts: Vec<f64>,
    /// Normalized service cost, `[context][action]`.
    pub table: Vec<Vec<f64>>,
    /// Factor applied to the raw sample during normalization.
    pub scale: f64,
    pub noise_sigma: f64,
    pub lengthscale: f64,
}

impl SynthInstance {
    /// GP hyperparameters matching the generating process after scaling.
    pub fn learner_config(&self) -> GpConfig {
        let kernel = Kernel::squared_exponential(self.lengthscale, self.scale * self.scale);
        GpConfig::new(kernel, self.noise_sigma)
    }

    pub fn to_task(&self) -> Task {
        let n = self.metric.len();
        Task {
            action_inputs: (0..n)
                .map(|i| self.metric.coords(i).expect("grid has coordinates").to_vec())
                .collect(),
            context_inputs: self.contexts.iter().map(|&e| vec![e]).collect(),
            service: self.table.clone(),
            signal: self.table.clone(),
            noise_sigma: self.noise_sigma,
            energy_offset: None,
            metric: self.metric.clone(),
        }
    }
}

/// Lower Cholesky factor of `k + jitter·I`, retrying once with a larger
/// jitter.
fn cholesky_jittered(k: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    for jitter in [1e-8, 1e-6] {
        if let Some(l) = dense_cholesky(k, jitter) {
            return Ok(l);
        }
    }
    Err(Error::numerical("kernel matrix is not positive definite even with jitter 1e-6", f64::NAN))
}

fn dense_cholesky(k: &[Vec<f64>], jitter: f64) -> Option<Vec<Vec<f64>>> {
    let n = k.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = k[i][j] + if i == j { jitter } else { 0.0 };
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn se_gram(points: &[Vec<f64>], lengthscale: f64) -> Vec<Vec<f64>> {
    let k = Kernel::squared_exponential(lengthscale, 1.0);
    points
        .iter()
        .map(|a| points.iter().map(|b| k.eval(a, b)).collect())
        .collect()
}

/// Joint sample of a unit-variance SE GP over `actions × contexts`, indexed
/// `[context][action]`.
///
/// The SE kernel on the concatenated input factorizes into an action part and
/// a context part, so the joint covariance is `K_e ⊗ K_x` and a sample is
/// `L_x Z L_eᵀ` for a standard normal matrix `Z`.
pub fn sample_joint_gp(
    actions: &[Vec<f64>],
    contexts: &[Vec<f64>],
    lengthscale: f64,
    rng: &mut Rng,
) -> Result<Vec<Vec<f64>>> {
    let lx = cholesky_jittered(&se_gram(actions, lengthscale))?;
    let le = cholesky_jittered(&se_gram(contexts, lengthscale))?;
    let (n, c) = (actions.len(), contexts.len());
    let z: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..c).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    // a = L_x Z, then g = a L_eᵀ
    let mut a = vec![vec![0.0; c]; n];
    for i in 0..n {
        for p in 0..=i {
            let lip = lx[i][p];
            if lip != 0.0 {
                for j in 0..c {
                    a[i][j] += lip * z[p][j];
                }
            }
        }
    }
    let mut g = vec![vec![0.0; n]; c];
    for (e, row) in g.iter_mut().enumerate() {
        for (i, ai) in a.iter().enumerate() {
            row[i] = (0..=e).map(|p| ai[p] * le[e][p]).sum();
        }
    }
    Ok(g)
}

/// Samples and normalizes a synthetic instance: the minimum is shifted to
/// zero, the mean cost is matched to the mean pairwise movement cost, and
/// the noise level is a fraction of the cost range.
pub fn synth_instance(seed: u64, params: &SynthParams) -> Result<SynthInstance> {
    if params.side == 0 || params.n_contexts == 0 {
        return Err(Error::parameter("grid side and context count must be positive"));
    }
    if !(params.lengthscale > 0.0) || !(params.noise_fraction >= 0.0) {
        return Err(Error::parameter("lengthscale must be positive and noise fraction non-negative"));
    }
    let metric = FiniteMetric::unit_grid(params.side)?;
    let mut rng = rng::stream(seed, Stream::Instance);
    let contexts: Vec<f64> = (0..params.n_contexts)
        .map(|_| loop {
            let e: f64 = rng.random();
            if e > 0.0 {
                break e;
            }
        })
        .collect();
    let actions: Vec<Vec<f64>> = (0..metric.len())
        .map(|i| metric.coords(i).expect("grid has coordinates").to_vec())
        .collect();
    let ctx: Vec<Vec<f64>> = contexts.iter().map(|&e| vec![e]).collect();
    let mut table = sample_joint_gp(&actions, &ctx, params.lengthscale, &mut rng)?;

    let min = table.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let count = (table.len() * metric.len()) as f64;
    let mean = table.iter().flatten().map(|v| v - min).sum::<f64>() / count;
    let target = metric.mean_pairwise_distance();
    let scale = if mean > 0.0 { target / mean } else { 1.0 };
    for v in table.iter_mut().flatten() {
        *v = (*v - min) * scale;
    }
    let max = table.iter().flatten().copied().fold(0.0, f64::max);
    Ok(SynthInstance {
        metric,
        contexts,
        table,
        scale,
        noise_sigma: params.noise_fraction * max,
        lengthscale: params.lengthscale,
    })
}
