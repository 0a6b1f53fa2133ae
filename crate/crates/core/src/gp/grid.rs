use super::model::{clamp_variance, dot, GpModel};
use crate::error::Result;

/// Posterior over a fixed set of query inputs, kept in step with a growing
/// model.
///
/// For each query `q` the cache holds `v_q = L⁻¹ k_t(q)`; appending a data
/// point adds one entry per query at `O(t)` cost, so a full sweep costs
/// `O(t·m)` instead of `O(t²·m)`. The cache rebuilds itself when the model's
/// factor was recomputed or the model is not the one it was built against.
#[derive(Clone, Debug)]
pub struct PosteriorGrid {
    queries: Vec<Vec<f64>>,
    prior_var: Vec<f64>,
    cols: Vec<Vec<f64>>,
    sumsq: Vec<f64>,
    rows: usize,
    factor_id: (u64, u64),
}

impl PosteriorGrid {
    /// `queries` are raw (un-normalized) inputs.
    pub fn new(model: &GpModel, queries: &[Vec<f64>]) -> Self {
        let queries: Vec<Vec<f64>> = queries.iter().map(|q| model.normalize(q)).collect();
        let prior_var = queries.iter().map(|q| model.k(q, q)).collect();
        let m = queries.len();
        Self {
            queries,
            prior_var,
            cols: vec![Vec::new(); m],
            sumsq: vec![0.0; m],
            rows: 0,
            factor_id: model.factor_id(),
        }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    fn sync(&mut self, model: &GpModel) {
        if model.factor_id() != self.factor_id || model.len() < self.rows {
            self.cols.iter_mut().for_each(Vec::clear);
            self.sumsq.iter_mut().for_each(|s| *s = 0.0);
            self.rows = 0;
            self.factor_id = model.factor_id();
        }
        for r in self.rows..model.len() {
            let row = model.cholesky_row(r);
            let xr = &model.inputs()[r];
            for (j, q) in self.queries.iter().enumerate() {
                let col = &mut self.cols[j];
                let v = (model.k(xr, q) - dot(&row[..r], col)) / row[r];
                col.push(v);
                self.sumsq[j] += v * v;
            }
        }
        self.rows = model.len();
    }

    /// Posterior `(mean, stdev)` at every query.
    pub fn posterior(&mut self, model: &GpModel) -> Result<Vec<(f64, f64)>> {
        self.sync(model);
        let w = model.whitened();
        let prior_mean = model.config().prior_mean;
        self.cols
            .iter()
            .zip(&self.sumsq)
            .zip(&self.prior_var)
            .map(|((col, &ss), &pv)| {
                let var = clamp_variance(pv - ss, pv)?;
                Ok((prior_mean + dot(col, w), var.sqrt()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{GpConfig, Kernel};

    #[test]
    fn grid_matches_direct_posterior() {
        let cfg = GpConfig::new(Kernel::squared_exponential(0.4, 1.3), 0.2);
        let mut model = GpModel::new(cfg).unwrap();
        let queries: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 * 0.2, 0.5]).collect();
        let mut grid = PosteriorGrid::new(&model, &queries);
        for step in 0..40 {
            let x = [(step as f64 * 0.37) % 1.3, (step as f64 * 0.11) % 1.0];
            model.add(&x, (3.0 * x[0]).cos() + x[1]).unwrap();
            if step % 3 == 0 {
                let cached = grid.posterior(&model).unwrap();
                for (q, (m, s)) in queries.iter().zip(cached) {
                    let (dm, ds) = model.posterior(q).unwrap();
                    assert!((m - dm).abs() < 1e-10 && (s - ds).abs() < 1e-10);
                }
            }
        }
        // a different model forces a rebuild
        let other = GpModel::new(model.config().clone()).unwrap();
        let fresh = grid.posterior(&other).unwrap();
        assert!(fresh.iter().all(|&(m, s)| m == 0.0 && (s - 1.3f64.sqrt()).abs() < 1e-15));
    }
}
