use crate::error::{Error, Result};
use crate::hst::HstTree;

/// Tolerance on the polytope constraints when validating states.
pub const STATE_TOLERANCE: f64 = 1e-8;

/// Vertex marginals `z ∈ K_T`: `z_u` is the probability that the action lies
/// below `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeState {
    z: Vec<f64>,
}

impl TreeState {
    /// Validates `z_r = 1`, non-negativity and `z_u = Σ_children z_ν`.
    pub fn new(tree: &HstTree, z: Vec<f64>) -> Result<Self> {
        if z.len() != tree.n_vertices() {
            return Err(Error::input("state length does not match the tree"));
        }
        if (z[tree.root()] - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::input("root mass must be 1"));
        }
        if z.iter().any(|&v| !(v >= -STATE_TOLERANCE)) {
            return Err(Error::input("negative or non-finite vertex mass"));
        }
        for &u in tree.internal_order() {
            let s: f64 = tree.children(u).iter().map(|&c| z[c]).sum();
            if (s - z[u]).abs() > STATE_TOLERANCE {
                return Err(Error::input(format!("children of vertex {u} do not sum to its mass")));
            }
        }
        Ok(Self { z })
    }

    /// Lifts a leaf distribution (indexed by point) to vertex marginals.
    pub fn from_leaf_probs(tree: &HstTree, probs: &[f64]) -> Result<Self> {
        if probs.len() != tree.n_leaves() {
            return Err(Error::input("leaf distribution length does not match the tree"));
        }
        let mut z = tree.accumulate(probs);
        z[tree.root()] = 1.0;
        Self::new(tree, z)
    }

    /// Deterministic state at `point`: 1 on its root path, 0 elsewhere.
    pub fn point_mass(tree: &HstTree, point: usize) -> Result<Self> {
        let mut z = vec![0.0; tree.n_vertices()];
        let mut v = Some(tree.leaf_vertex(point)?);
        while let Some(u) = v {
            z[u] = 1.0;
            v = tree.parent(u);
        }
        Ok(Self { z })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    /// Leaf probabilities `l(z)`, indexed by point.
    pub fn leaf_probs(&self, tree: &HstTree) -> Vec<f64> {
        (0..tree.n_leaves())
            .map(|p| self.z[tree.leaf_vertex(p).expect("valid point")])
            .collect()
    }
}

/// Conditional probabilities `q ∈ Q_T`, indexed by vertex; `q_ν` is the
/// probability of descending into `ν` given the action lies below its
/// parent. The root entry is fixed at 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CondState {
    q: Vec<f64>,
}

impl CondState {
    pub fn new(tree: &HstTree, q: Vec<f64>) -> Result<Self> {
        if q.len() != tree.n_vertices() {
            return Err(Error::input("conditional state length does not match the tree"));
        }
        if q.iter().any(|&v| !(v >= -STATE_TOLERANCE)) {
            return Err(Error::input("negative or non-finite conditional probability"));
        }
        for &u in tree.internal_order() {
            let s: f64 = tree.children(u).iter().map(|&c| q[c]).sum();
            if (s - 1.0).abs() > STATE_TOLERANCE {
                return Err(Error::input(format!(
                    "conditionals below vertex {u} sum to {s}, not 1"
                )));
            }
        }
        let mut q = q;
        q[tree.root()] = 1.0;
        Ok(Self { q })
    }

    /// Uniform conditionals at every internal vertex.
    pub fn uniform(tree: &HstTree) -> Self {
        let mut q = vec![1.0; tree.n_vertices()];
        for &u in tree.internal_order() {
            let k = tree.children(u).len() as f64;
            for &c in tree.children(u) {
                q[c] = 1.0 / k;
            }
        }
        Self { q }
    }

    pub(crate) fn from_raw(q: Vec<f64>) -> Self {
        Self { q }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// Conditional distribution over the children of `u`.
    pub fn children_of(&self, tree: &HstTree, u: usize) -> Vec<f64> {
        tree.children(u).iter().map(|&c| self.q[c]).collect()
    }
}

/// `Δ`: conditionals to marginals, `z_ν = z_parent(ν) · q_ν` top-down.
pub fn delta_map(tree: &HstTree, q: &CondState) -> TreeState {
    let mut z = vec![0.0; tree.n_vertices()];
    z[tree.root()] = 1.0;
    for &u in tree.internal_order().iter().rev() {
        for &c in tree.children(u) {
            z[c] = z[u] * q.q[c];
        }
    }
    TreeState { z }
}

/// `Δ⁻¹`: `q_ν = z_ν / z_parent(ν)`, uniform below vertices of zero mass.
pub fn delta_inverse(tree: &HstTree, z: &TreeState) -> CondState {
    let mut q = vec![1.0; tree.n_vertices()];
    for &u in tree.internal_order() {
        let children = tree.children(u);
        let zu = z.z[u];
        if zu > 0.0 {
            for &c in children {
                q[c] = z.z[c] / zu;
            }
        } else {
            let k = children.len() as f64;
            for &c in children {
                q[c] = 1.0 / k;
            }
        }
    }
    CondState { q }
}
