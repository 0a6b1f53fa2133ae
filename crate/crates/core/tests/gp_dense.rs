//! The incremental GP against a dense reference, across the periodic
//! refactorization.

use gpmd::gp::{GpConfig, GpModel, Kernel, PosteriorGrid, REFACTOR_EVERY};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_posterior(cfg: &GpConfig, xs: &[Vec<f64>], ys: &[f64], q: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let k = DMatrix::from_fn(n, n, |i, j| cfg.kernel.eval(&xs[i], &xs[j])) + DMatrix::identity(n, n) * cfg.lam;
    let chol = k.cholesky().unwrap();
    let y = DVector::from_iterator(n, ys.iter().map(|y| y - cfg.prior_mean));
    let kq = DVector::from_iterator(n, xs.iter().map(|x| cfg.kernel.eval(x, q)));
    let mean = cfg.prior_mean + kq.dot(&chol.solve(&y));
    let var = cfg.kernel.eval(q, q) - kq.dot(&chol.solve(&kq));
    (mean, var.max(0.0).sqrt())
}

#[test]
fn posterior_survives_refactorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = GpConfig::new(Kernel::squared_exponential(0.3, 1.5), 0.1);
    let mut model = GpModel::new(cfg.clone()).unwrap();
    let queries: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.random(), rng.random()]).collect();
    let mut grid = PosteriorGrid::new(&model, &queries);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in 1..=REFACTOR_EVERY + 44 {
        let x = vec![rng.random::<f64>(), rng.random::<f64>()];
        let y = x[0] - 2.0 * x[1] + 0.05 * rng.random::<f64>();
        model.add(&x, y).unwrap();
        xs.push(x);
        ys.push(y);
        if [REFACTOR_EVERY - 1, REFACTOR_EVERY, REFACTOR_EVERY + 1, REFACTOR_EVERY + 44].contains(&t) {
            let cached = grid.posterior(&model).unwrap();
            for (q, (gm, gs)) in queries.iter().zip(cached) {
                let (m, s) = model.posterior(q).unwrap();
                let (dm, ds) = dense_posterior(&cfg, &xs, &ys, q);
                assert!((m - dm).abs() < 1e-8 && (s - ds).abs() < 1e-8, "t={t}: {m} vs {dm}, {s} vs {ds}");
                assert!((gm - dm).abs() < 1e-8 && (gs - ds).abs() < 1e-8, "grid at t={t}");
            }
        }
    }
}

#[test]
fn duplicate_inputs_shrink_variance() {
    let cfg = GpConfig::new(Kernel::squared_exponential(0.5, 1.0), 0.3);
    let mut model = GpModel::new(cfg).unwrap();
    let x = [0.2, 0.7];
    let mut last = model.posterior(&x).unwrap().1;
    for _ in 0..20 {
        model.add(&x, 1.0).unwrap();
        let sd = model.posterior(&x).unwrap().1;
        assert!(sd < last);
        last = sd;
    }
    // twenty noisy copies average toward the observed value
    assert!((model.posterior(&x).unwrap().0 - 1.0).abs() < 0.01);
}
