//! Randomized embedding of a finite metric into a τ-HST (FRT construction,
//! base-τ variant).
//!
//! A uniform random permutation of the points fixes the priority of cluster
//! centres, and a radius multiplier `β ∈ [1, τ)` is drawn with density
//! proportional to `1/β`. A cluster at level `i` (radius `β·τ^i`) is split by
//! assigning each of its points to the first centre, in permutation order,
//! within radius `β·τ^(i-1)`. The edge from a level-`(i-1)` cluster to its
//! parent weighs `β·τ^i`, so two points separated below a level-`i` cluster
//! (hence at distance at most `2β·τ^i`) are at least that far apart in the
//! tree. Points at distance zero from each other share one cluster that fans
//! out into zero-weight leaves.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hst::HstTree;
use crate::metric::FiniteMetric;
use crate::rng::{self, Stream};

pub const DEFAULT_TAU: f64 = 5.0;

/// Embeds `metric` into a random τ-HST; deterministic in `(metric, tau, seed)`.
pub fn frt_embed(metric: &FiniteMetric, tau: f64, seed: u64) -> Result<HstTree> {
    if !(tau > 1.0) || !tau.is_finite() {
        return Err(Error::parameter(format!("tau must exceed 1, got {tau}")));
    }
    let mut rng = rng::stream(seed, Stream::Frt);
    let n = metric.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let beta = tau.powf(rng.random::<f64>());

    let mut builder = Builder::default();
    let root = builder.vertex(None, 0.0);
    let diameter = metric.diameter();
    if diameter == 0.0 {
        if n == 1 {
            builder.point[root] = Some(0);
        } else {
            for p in 0..n {
                let leaf = builder.vertex(Some(root), 0.0);
                builder.point[leaf] = Some(p);
            }
        }
        return builder.finish(tau);
    }

    let radius = |level: i32| beta * tau.powi(level);
    let mut top = ((diameter / beta).ln() / tau.ln()).ceil() as i32;
    while radius(top) < diameter {
        top += 1;
    }
    while radius(top - 1) >= diameter {
        top -= 1;
    }

    let all: Vec<usize> = (0..n).collect();
    let mut stack = vec![(root, all, top)];
    while let Some((vertex, members, level)) = stack.pop() {
        if members.len() == 1 {
            builder.point[vertex] = Some(members[0]);
            continue;
        }
        if cluster_diameter(metric, &members) == 0.0 {
            for &p in &members {
                let leaf = builder.vertex(Some(vertex), 0.0);
                builder.point[leaf] = Some(p);
            }
            continue;
        }
        let child_radius = radius(level - 1);
        let edge_weight = radius(level);
        let mut assigned = vec![false; members.len()];
        let mut parts = Vec::new();
        for &centre in &perm {
            let mut part = Vec::new();
            for (k, &p) in members.iter().enumerate() {
                if !assigned[k] && metric.dist(p, centre) <= child_radius {
                    assigned[k] = true;
                    part.push(p);
                }
            }
            if !part.is_empty() {
                parts.push(part);
            }
            if assigned.iter().all(|&a| a) {
                break;
            }
        }
        // Children get consecutive ids in centre order; push in reverse so the
        // first child is expanded first.
        let ids: Vec<usize> = parts
            .iter()
            .map(|_| builder.vertex(Some(vertex), edge_weight))
            .collect();
        for (id, part) in ids.into_iter().zip(parts).rev() {
            stack.push((id, part, level - 1));
        }
    }
    builder.finish(tau)
}

fn cluster_diameter(metric: &FiniteMetric, members: &[usize]) -> f64 {
    let mut d = 0.0f64;
    for (k, &a) in members.iter().enumerate() {
        for &b in &members[k + 1..] {
            d = d.max(metric.dist(a, b));
        }
    }
    d
}

#[derive(Default)]
struct Builder {
    parent: Vec<Option<usize>>,
    weight: Vec<f64>,
    point: Vec<Option<usize>>,
}

impl Builder {
    fn vertex(&mut self, parent: Option<usize>, weight: f64) -> usize {
        self.parent.push(parent);
        self.weight.push(weight);
        self.point.push(None);
        self.parent.len() - 1
    }

    fn finish(self, tau: f64) -> Result<HstTree> {
        HstTree::from_parts(self.parent, self.weight, self.point, tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Norm;

    #[test]
    fn single_point() {
        let m = FiniteMetric::from_points(vec![vec![0.3, 0.1]], Norm::Euclidean).unwrap();
        let t = frt_embed(&m, 5.0, 1).unwrap();
        assert_eq!(t.n_vertices(), 1);
        assert_eq!(t.tree_distance(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn two_points_dominate() {
        let m = FiniteMetric::from_matrix(vec![vec![0.0, 3.5], vec![3.5, 0.0]]).unwrap();
        for seed in 0..50 {
            let t = frt_embed(&m, 5.0, seed).unwrap();
            assert!(t.tree_distance(0, 1).unwrap() >= 3.5);
        }
    }

    #[test]
    fn rejects_small_tau() {
        let m = FiniteMetric::unit_grid(2).unwrap();
        assert!(matches!(frt_embed(&m, 1.0, 0), Err(Error::Parameter(_))));
        assert!(matches!(frt_embed(&m, 0.5, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn all_zero_metric_collapses() {
        let m = FiniteMetric::from_matrix(vec![vec![0.0; 3]; 3]).unwrap();
        let t = frt_embed(&m, 5.0, 3).unwrap();
        assert_eq!(t.n_leaves(), 3);
        assert_eq!(t.tree_distance(0, 2).unwrap(), 0.0);
    }

    #[test]
    fn duplicates_fan_out_with_zero_weight() {
        let pts = vec![vec![0.0], vec![0.0], vec![1.0], vec![4.0]];
        let m = FiniteMetric::from_points(pts, Norm::Euclidean).unwrap();
        for seed in 0..20 {
            let t = frt_embed(&m, 5.0, seed).unwrap();
            assert_eq!(t.tree_distance(0, 1).unwrap(), 0.0);
            assert!(t.is_tau_hst());
            for a in 0..4 {
                for b in 0..4 {
                    assert!(t.tree_distance(a, b).unwrap() >= m.dist(a, b));
                }
            }
            for v in 0..t.n_vertices() {
                if v != t.root() {
                    let r = t.leaf_count_ratios(v).unwrap();
                    assert!(r.theta > 0.0 && r.delta > 0.0);
                }
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let m = FiniteMetric::unit_grid(4).unwrap();
        let a = frt_embed(&m, 5.0, 11).unwrap();
        let b = frt_embed(&m, 5.0, 11).unwrap();
        assert_eq!(format!("{}", a.dump(None)), format!("{}", b.dump(None)));
    }
}
