//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use gpmd::hst::HstTree;
use gpmd::metric::FiniteMetric;
use rand::seq::SliceRandom;
use rand::Rng;

/// Random HST with `n` leaves: random splits of 1 to 4 parts, child weights a
/// random fraction of `parent / τ`, and now and then a cluster of zero-weight
/// leaves.
pub fn random_hst<R: Rng + ?Sized>(rng: &mut R, n: usize, tau: f64) -> HstTree {
    let mut parent = vec![None];
    let mut weight = vec![0.0];
    let mut vertex_point = vec![None];
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(rng);
    // (vertex, members, weight given to its children)
    let mut stack = vec![(0usize, points, rng.random_range(0.5..2.0))];
    while let Some((u, members, w)) = stack.pop() {
        if members.len() == 1 && u != 0 {
            vertex_point[u] = Some(members[0]);
            continue;
        }
        if members.len() > 1 && u != 0 && rng.random_bool(0.05) {
            for &p in &members {
                parent.push(Some(u));
                weight.push(0.0);
                vertex_point.push(Some(p));
            }
            continue;
        }
        let k = if members.len() == 1 {
            1
        } else if rng.random_bool(0.1) {
            1
        } else {
            rng.random_range(2..=members.len().min(4))
        };
        let mut cuts: Vec<usize> = (1..members.len()).collect();
        cuts.shuffle(rng);
        let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
        cuts.sort_unstable();
        cuts.push(members.len());
        let mut start = 0;
        for &end in &cuts {
            let v = parent.len();
            parent.push(Some(u));
            weight.push(w);
            vertex_point.push(None);
            let next = w / tau * rng.random_range(0.3..1.0);
            stack.push((v, members[start..end].to_vec(), next));
            start = end;
        }
    }
    HstTree::from_parts(parent, weight, vertex_point, tau).expect("valid random tree")
}

/// Leaf-to-leaf tree distances indexed by point.
pub fn leaf_distances(tree: &HstTree) -> Vec<Vec<f64>> {
    let n = tree.n_leaves();
    (0..n)
        .map(|i| (0..n).map(|j| tree.tree_distance(i, j).unwrap()).collect())
        .collect()
}

/// Random probability vector; roughly `zero_frac` of the entries are zero.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize, zero_frac: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(zero_frac) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Minimum transport cost from `a` to `b` under `cost`, by successive
/// shortest paths with Dijkstra on reduced costs over the dense bipartite
/// network `source → supply i → demand j → sink`.
pub fn min_cost_flow(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let nodes = 2 * n + 2;
    let (s, t) = (2 * n, 2 * n + 1);
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    // flow[i][j] on the supply-to-demand arcs
    let mut flow = vec![vec![0.0f64; n]; n];
    let mut pot = vec![0.0f64; nodes];
    let eps = 1e-15;
    let inf = f64::INFINITY;
    loop {
        if supply.iter().all(|&x| x <= eps) || demand.iter().all(|&x| x <= eps) {
            break;
        }
        let mut dist = vec![inf; nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[s] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = inf;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            let relax = |v: usize, c: f64, dist: &mut Vec<f64>, prev: &mut Vec<usize>| {
                let rc = (c + pot[u] - pot[v]).max(0.0);
                if dist[u] + rc < dist[v] {
                    dist[v] = dist[u] + rc;
                    prev[v] = u;
                }
            };
            if u == s {
                for i in 0..n {
                    if supply[i] > eps {
                        relax(i, 0.0, &mut dist, &mut prev);
                    }
                }
            } else if u < n {
                for j in 0..n {
                    relax(n + j, cost[u][j], &mut dist, &mut prev);
                }
            } else if u < 2 * n {
                let j = u - n;
                for i in 0..n {
                    if flow[i][j] > eps {
                        relax(i, -cost[i][j], &mut dist, &mut prev);
                    }
                }
                if demand[j] > eps {
                    relax(t, 0.0, &mut dist, &mut prev);
                }
            }
        }
        assert!(dist[t].is_finite(), "sink unreachable");
        for v in 0..nodes {
            if dist[v].is_finite() {
                pot[v] += dist[v];
            }
        }
        // bottleneck along the path
        let mut path = vec![t];
        let mut v = t;
        while v != s {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        let first = path[1];
        let last = path[path.len() - 2] - n;
        let mut amount = supply[first].min(demand[last]);
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u >= n && u < 2 * n && v < n {
                amount = amount.min(flow[v][u - n]);
            }
        }
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u < n && v >= n && v < 2 * n {
                flow[u][v - n] += amount;
            } else if u >= n && u < 2 * n && v < n {
                flow[v][u - n] -= amount;
            }
        }
        supply[first] -= amount;
        demand[last] -= amount;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += flow[i][j] * cost[i][j];
        }
    }
    total
}

/// Minimum of a convex `f` over the simplex grid `{p : p_k ∈ step·ℕ, Σp = 1}`
/// with `k ≤ 3` coordinates. For three coordinates every first coordinate is
/// scanned and the second found by discrete ternary search, which is exact on
/// the grid because a convex function restricted to a line is unimodal.
pub fn simplex_grid_min(k: usize, steps: usize, f: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let h = 1.0 / steps as f64;
    let at = |i: usize| if i == steps { 1.0 } else { i as f64 * h };
    match k {
        1 => (f(&[1.0]), vec![1.0]),
        2 => {
            let mut best = (f64::INFINITY, vec![]);
            for i in 0..=steps {
                let p = [at(i), at(steps - i)];
                let v = f(&p);
                if v < best.0 {
                    best = (v, p.to_vec());
                }
            }
            best
        }
        3 => {
            let mut best = (f64::INFINITY, vec![]);
            for i in 0..=steps {
                let rest = steps - i;
                let g = |j: usize| f(&[at(i), at(j), at(rest - j)]);
                let (mut lo, mut hi) = (0usize, rest);
                while hi - lo > 2 {
                    let m1 = lo + (hi - lo) / 3;
                    let m2 = hi - (hi - lo) / 3;
                    if g(m1) <= g(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                for j in lo..=hi {
                    let v = g(j);
                    if v < best.0 {
                        best = (v, vec![at(i), at(j), at(rest - j)]);
                    }
                }
            }
            best
        }
        _ => panic!("grid oracle supports at most three coordinates"),
    }
}

/// Exhaustive minimum of `Σ cost[e_h][x_h] + d(x_{h−1}, x_h)` over all
/// `n^H` action sequences.
pub fn brute_force_path(metric: &FiniteMetric, cost: &[Vec<f64>], contexts: &[usize], x0: usize) -> f64 {
    let n = metric.len();
    let h = contexts.len();
    let mut best = f64::INFINITY;
    let mut seq = vec![0usize; h];
    loop {
        let mut total = 0.0;
        let mut prev = x0;
        for (step, &x) in seq.iter().enumerate() {
            // same association as the DP, so equal sequences give equal floats
            total = (total + metric.dist(prev, x)) + cost[contexts[step]][x];
            prev = x;
        }
        best = best.min(total);
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == h {
                return best;
            }
            seq[pos] += 1;
            if seq[pos] < n {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
    }
}

/// Random metric from points in the unit square.
pub fn random_metric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> FiniteMetric {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
    FiniteMetric::from_points(pts, gpmd::metric::Norm::Euclidean).unwrap()
}
