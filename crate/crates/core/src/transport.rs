//! Optimal transport between leaf distributions under the tree metric.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hst::HstTree;
use crate::metric::FiniteMetric;
use crate::mts::TreeState;

/// Tolerance on `Σ probs = 1`.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-10;
/// Residual masses below this are treated as rounding and dropped while
/// matching.
const DUST: f64 = 1e-15;

/// Probability distribution over the points carried by the leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafDistribution {
    probs: Vec<f64>,
}

impl LeafDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::input("leaf probabilities must be finite and non-negative"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::input(format!("leaf probabilities sum to {s}")));
        }
        Ok(Self { probs })
    }

    pub fn point_mass(n: usize, point: usize) -> Result<Self> {
        if point >= n {
            return Err(Error::domain(format!("point {point} out of range for {n} leaves")));
        }
        let mut probs = vec![0.0; n];
        probs[point] = 1.0;
        Ok(Self { probs })
    }

    /// `l(z)`, clipping rounding negatives.
    pub fn from_state(tree: &HstTree, z: &TreeState) -> Result<Self> {
        Self::new(z.leaf_probs(tree).into_iter().map(|p| p.max(0.0)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check(tree: &HstTree, a: &LeafDistribution, b: &LeafDistribution) -> Result<()> {
    if a.len() != tree.n_leaves() || b.len() != tree.n_leaves() {
        return Err(Error::domain(format!(
            "distributions over {} and {} points on a tree with {} leaves",
            a.len(),
            b.len(),
            tree.n_leaves()
        )));
    }
    Ok(())
}

/// `W¹_T(a, b) = Σ_u w_u |z_u − z'_u|` over the lifted vertex masses.
pub fn tree_wasserstein(tree: &HstTree, a: &LeafDistribution, b: &LeafDistribution) -> Result<f64> {
    check(tree, a, b)?;
    let za = tree.accumulate(&a.probs);
    let zb = tree.accumulate(&b.probs);
    Ok((0..tree.n_vertices())
        .filter(|&v| v != tree.root())
        .map(|v| tree.weight(v) * (za[v] - zb[v]).abs())
        .sum())
}

/// Sparse joint distribution of (previous, next) points.
#[derive(Clone, Debug)]
pub struct Coupling {
    /// `(from, to, mass)` sorted by `(from, to)`.
    entries: Vec<(usize, usize, f64)>,
    row_start: Vec<usize>,
    next: Vec<f64>,
}

impl Coupling {
    fn from_entries(n: usize, mut entries: Vec<(usize, usize, f64)>, next: Vec<f64>) -> Self {
        entries.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(l) if l.0 == e.0 && l.1 == e.1 => l.2 += e.2,
                _ => merged.push(e),
            }
        }
        let mut row_start = vec![0; n + 1];
        for e in &merged {
            row_start[e.0 + 1] += 1;
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Self {
            entries: merged,
            row_start,
            next,
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Joint mass at `(from, to)`.
    pub fn mass(&self, from: usize, to: usize) -> f64 {
        self.row(from)
            .iter()
            .find(|e| e.1 == to)
            .map_or(0.0, |e| e.2)
    }

    fn row(&self, from: usize) -> &[(usize, usize, f64)] {
        if from + 1 >= self.row_start.len() {
            return &[];
        }
        &self.entries[self.row_start[from]..self.row_start[from + 1]]
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.next.len()];
        for e in &self.entries {
            m[e.0] += e.2;
        }
        m
    }

    pub fn column_marginals(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.next.len()];
        for e in &self.entries {
            m[e.1] += e.2;
        }
        m
    }

    /// Expected tree distance moved.
    pub fn tree_cost(&self, tree: &HstTree) -> Result<f64> {
        let mut c = 0.0;
        for &(a, b, m) in &self.entries {
            c += m * tree.tree_distance(a, b)?;
        }
        Ok(c)
    }

    /// Expected distance moved under the original metric.
    pub fn metric_cost(&self, metric: &FiniteMetric) -> f64 {
        self.entries.iter().map(|&(a, b, m)| m * metric.dist(a, b)).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("from,to,mass\n");
        for (a, b, m) in &self.entries {
            let _ = writeln!(out, "{a},{b},{m}");
        }
        out
    }
}

/// Coupling of `a` and `b` with expected tree cost `W¹_T(a, b)`.
///
/// Bottom-up matching: each leaf keeps `min(a, b)` in place; unmatched
/// surplus and deficit travel upwards and are paired at the lowest vertex
/// where they meet, so the mass crossing each edge is exactly
/// `|z_u − z'_u|`.
pub fn optimal_coupling(tree: &HstTree, a: &LeafDistribution, b: &LeafDistribution) -> Result<Coupling> {
    check(tree, a, b)?;
    let n = tree.n_leaves();
    let nv = tree.n_vertices();
    let mut entries = Vec::new();
    let mut surplus: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    let mut deficit: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    for p in 0..n {
        let (pa, pb) = (a.probs[p], b.probs[p]);
        let keep = pa.min(pb);
        if keep > 0.0 {
            entries.push((p, p, keep));
        }
        let v = tree.leaf_vertex(p)?;
        if pa - keep > DUST {
            surplus[v].push((p, pa - keep));
        }
        if pb - keep > DUST {
            deficit[v].push((p, pb - keep));
        }
    }
    for &u in tree.internal_order() {
        let mut s: Vec<(usize, f64)> = Vec::new();
        let mut d: Vec<(usize, f64)> = Vec::new();
        for &c in tree.children(u) {
            s.append(&mut surplus[c]);
            d.append(&mut deficit[c]);
        }
        let (mut i, mut j) = (0, 0);
        while i < s.len() && j < d.len() {
            let m = s[i].1.min(d[j].1);
            entries.push((s[i].0, d[j].0, m));
            s[i].1 -= m;
            d[j].1 -= m;
            if s[i].1 <= DUST {
                i += 1;
            }
            if d[j].1 <= DUST {
                j += 1;
            }
        }
        surplus[u] = s.split_off(i);
        deficit[u] = d.split_off(j);
    }
    Ok(Coupling::from_entries(n, entries, b.probs.clone()))
}

/// Draws the next point from the coupling row of `prev`; falls back to the
/// next marginal when that row carries no mass.
pub fn sample_next<R: rand::Rng + ?Sized>(coupling: &Coupling, prev: usize, rng: &mut R) -> usize {
    let row = coupling.row(prev);
    let total: f64 = row.iter().map(|e| e.2).sum();
    if total > 0.0 {
        let mut u = rng.random::<f64>() * total;
        for e in row {
            u -= e.2;
            if u < 0.0 {
                return e.1;
            }
        }
        return row.iter().rev().find(|e| e.2 > 0.0).map_or(prev, |e| e.1);
    }
    sample_marginal(&coupling.next, rng)
}

/// Draws an index with probability proportional to `probs`.
pub fn sample_marginal<R: rand::Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        u -= p;
        if u < 0.0 {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
