//! Hierarchically separated trees whose leaves are the points of a finite
//! metric.
//!
//! Every vertex `v` carries the weight `w_v` of the edge to its parent (the
//! root weight is unused). Leaves are addressed by the index of the metric
//! point they represent; vertex indices are internal to the tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on the τ-separation check, absorbing round-off in weights
/// computed as powers of τ.
const TAU_SLACK: f64 = 1e-12;

/// Leaf-count ratios of a non-root vertex relative to its parent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafRatios {
    /// `|L(u)| / |L(parent(u))|`.
    pub theta: f64,
    /// `1 + ln(1/θ)`.
    pub eta: f64,
    /// `θ / η`.
    pub delta: f64,
}

impl LeafRatios {
    pub fn from_counts(leaves: usize, parent_leaves: usize) -> Self {
        let theta = leaves as f64 / parent_leaves as f64;
        let eta = 1.0 + (1.0 / theta).ln();
        Self {
            theta,
            eta,
            delta: theta / eta,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HstTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    weight: Vec<f64>,
    vertex_point: Vec<Option<usize>>,
    point_vertex: Vec<usize>,
    tau: f64,
    root: usize,
    depth: Vec<usize>,
    leaf_count: Vec<usize>,
    internal_order: Vec<usize>,
}

impl HstTree {
    /// Assembles and validates a tree.
    ///
    /// `parent[v]` is `None` for exactly one vertex (the root). `vertex_point[v]`
    /// names the metric point of leaf `v`; leaves (childless vertices) must be
    /// exactly the vertices carrying a point, and points must be `0..n`
    /// without gaps. Children are ordered by vertex index.
    pub fn from_parts(
        parent: Vec<Option<usize>>,
        weight: Vec<f64>,
        vertex_point: Vec<Option<usize>>,
        tau: f64,
    ) -> Result<Self> {
        let nv = parent.len();
        if nv == 0 {
            return Err(Error::input("tree has no vertices"));
        }
        if weight.len() != nv || vertex_point.len() != nv {
            return Err(Error::input("tree arrays have mismatched lengths"));
        }
        if !(tau > 1.0) || !tau.is_finite() {
            return Err(Error::parameter(format!("tau must exceed 1, got {tau}")));
        }
        let roots: Vec<usize> = (0..nv).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::input(format!("expected one root, found {}", roots.len())));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); nv];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= nv || p == v {
                    return Err(Error::input(format!("vertex {v} has invalid parent {p}")));
                }
                children[p].push(v);
            }
        }

        // Depths by walking from the root; detects cycles and disconnected parts.
        let mut depth = vec![usize::MAX; nv];
        depth[root] = 0;
        let mut bfs = vec![root];
        let mut head = 0;
        while head < bfs.len() {
            let u = bfs[head];
            head += 1;
            for &c in &children[u] {
                depth[c] = depth[u] + 1;
                bfs.push(c);
            }
        }
        if bfs.len() != nv {
            return Err(Error::input("tree is not connected to its root"));
        }

        for (v, &w) in weight.iter().enumerate() {
            if v != root && (!w.is_finite() || w < 0.0) {
                return Err(Error::input(format!("vertex {v} has invalid weight {w}")));
            }
        }
        for v in 0..nv {
            if let Some(p) = parent[v] {
                if p != root && weight[v] > weight[p] / tau * (1.0 + TAU_SLACK) {
                    return Err(Error::input(format!(
                        "edge weight of vertex {v} ({}) breaks the {tau}-separation of its parent ({})",
                        weight[v], weight[p]
                    )));
                }
            }
        }

        let n_points = vertex_point.iter().filter(|p| p.is_some()).count();
        let mut point_vertex = vec![usize::MAX; n_points];
        for v in 0..nv {
            match (vertex_point[v], children[v].is_empty()) {
                (Some(p), true) => {
                    if p >= n_points || point_vertex[p] != usize::MAX {
                        return Err(Error::input(format!("leaf {v} has invalid point id {p}")));
                    }
                    point_vertex[p] = v;
                }
                (None, true) => {
                    return Err(Error::input(format!("leaf vertex {v} carries no point")))
                }
                (Some(_), false) => {
                    return Err(Error::input(format!("internal vertex {v} carries a point")))
                }
                (None, false) => {}
            }
        }

        let mut leaf_count = vec![0usize; nv];
        for &v in bfs.iter().rev() {
            leaf_count[v] = if children[v].is_empty() {
                1
            } else {
                children[v].iter().map(|&c| leaf_count[c]).sum()
            };
        }

        let mut internal_order: Vec<usize> =
            (0..nv).filter(|&v| !children[v].is_empty()).collect();
        internal_order.sort_by(|&a, &b| depth[b].cmp(&depth[a]).then(a.cmp(&b)));

        let mut weight = weight;
        weight[root] = 0.0;
        Ok(Self {
            parent,
            children,
            weight,
            vertex_point,
            point_vertex,
            tau,
            root,
            depth,
            leaf_count,
            internal_order,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.parent.len()
    }

    /// Number of leaves, equal to the number of metric points.
    pub fn n_leaves(&self) -> usize {
        self.point_vertex.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Weight of the edge from `v` to its parent; zero for the root.
    pub fn weight(&self, v: usize) -> f64 {
        self.weight[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    /// Number of leaves in the subtree rooted at `v`.
    pub fn leaf_count(&self, v: usize) -> usize {
        self.leaf_count[v]
    }

    /// Vertex representing metric point `point`.
    pub fn leaf_vertex(&self, point: usize) -> Result<usize> {
        self.point_vertex
            .get(point)
            .copied()
            .ok_or_else(|| Error::domain(format!("unknown leaf {point}")))
    }

    pub fn point_of(&self, v: usize) -> Option<usize> {
        self.vertex_point[v]
    }

    /// Internal vertices with every child before its parent: deepest level
    /// first, ties by ascending vertex index.
    pub fn internal_order(&self) -> &[usize] {
        &self.internal_order
    }

    /// Weighted path length between the leaves of points `a` and `b`.
    pub fn tree_distance(&self, a: usize, b: usize) -> Result<f64> {
        let mut u = self.leaf_vertex(a)?;
        let mut v = self.leaf_vertex(b)?;
        let mut total = 0.0;
        while self.depth[u] > self.depth[v] {
            total += self.weight[u];
            u = self.parent[u].expect("non-root has a parent");
        }
        while self.depth[v] > self.depth[u] {
            total += self.weight[v];
            v = self.parent[v].expect("non-root has a parent");
        }
        while u != v {
            total += self.weight[u] + self.weight[v];
            u = self.parent[u].expect("non-root has a parent");
            v = self.parent[v].expect("non-root has a parent");
        }
        Ok(total)
    }

    /// `θ, η, δ` for a non-root vertex.
    pub fn leaf_count_ratios(&self, v: usize) -> Result<LeafRatios> {
        let p = self
            .parent
            .get(v)
            .ok_or_else(|| Error::domain(format!("unknown vertex {v}")))?
            .ok_or_else(|| Error::domain("the root has no parent"))?;
        Ok(LeafRatios::from_counts(self.leaf_count[v], self.leaf_count[p]))
    }

    /// Ratios for every vertex; `None` at the root.
    pub fn all_leaf_count_ratios(&self) -> Vec<Option<LeafRatios>> {
        (0..self.n_vertices())
            .map(|v| self.leaf_count_ratios(v).ok())
            .collect()
    }

    /// Subtree sums of a per-point vector: entry `v` is the sum over the
    /// points below `v`.
    pub fn accumulate(&self, per_point: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n_vertices()];
        for (point, &v) in self.point_vertex.iter().enumerate() {
            z[v] = per_point[point];
        }
        for &u in &self.internal_order {
            z[u] = self.children[u].iter().map(|&c| z[c]).sum();
        }
        z
    }

    /// Checks the HST and τ-separation weight properties.
    pub fn is_tau_hst(&self) -> bool {
        (0..self.n_vertices()).all(|v| match self.parent[v] {
            Some(p) if p != self.root => self.weight[v] <= self.weight[p] / self.tau * (1.0 + TAU_SLACK),
            _ => true,
        })
    }

    /// Plain structure for debugging dumps.
    pub fn dump(&self, labels: Option<&dyn Fn(usize) -> String>) -> TreeDump {
        let vertices = (0..self.n_vertices())
            .map(|v| VertexDump {
                id: v,
                parent: self.parent[v],
                weight: self.weight[v],
                leaf: self.vertex_point[v],
                label: self.vertex_point[v].map(|p| match labels {
                    Some(f) => f(p),
                    None => p.to_string(),
                }),
            })
            .collect();
        TreeDump {
            tau: self.tau,
            root: self.root,
            vertices,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexDump {
    pub id: usize,
    pub parent: Option<usize>,
    pub weight: f64,
    pub leaf: Option<usize>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeDump {
    pub tau: f64,
    pub root: usize,
    pub vertices: Vec<VertexDump>,
}

impl std::fmt::Display for TreeDump {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "vertex,parent,weight,label")?;
        for v in &self.vertices {
            let parent = v.parent.map(|p| p.to_string()).unwrap_or_default();
            let label = v.label.clone().unwrap_or_default();
            writeln!(f, "{},{},{},{}", v.id, parent, v.weight, label)?;
        }
        Ok(())
    }
}

/// Complete `arity`-ary tree of the given depth with level weights
/// `top_weight / τ^level`; leaves are numbered left to right. Vertices are
/// numbered breadth-first from the root.
pub fn complete_tree(arity: usize, depth: usize, top_weight: f64, tau: f64) -> Result<HstTree> {
    if arity == 0 {
        return Err(Error::parameter("arity must be positive"));
    }
    let mut parent = vec![None];
    let mut weight = vec![0.0];
    let mut level = vec![0usize];
    let mut frontier = vec![0usize];
    for d in 1..=depth {
        let mut next = Vec::new();
        for &u in &frontier {
            for _ in 0..arity {
                parent.push(Some(u));
                weight.push(top_weight / tau.powi(d as i32 - 1));
                level.push(d);
                next.push(parent.len() - 1);
            }
        }
        frontier = next;
    }
    let mut vertex_point = vec![None; parent.len()];
    for (point, &v) in frontier.iter().enumerate() {
        vertex_point[v] = Some(point);
    }
    HstTree::from_parts(parent, weight, vertex_point, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(weights: &[f64]) -> HstTree {
        let mut parent = vec![None];
        let mut w = vec![0.0];
        let mut pts = vec![None];
        for (i, &x) in weights.iter().enumerate() {
            parent.push(Some(0));
            w.push(x);
            pts.push(Some(i));
        }
        HstTree::from_parts(parent, w, pts, 2.0).unwrap()
    }

    #[test]
    fn star_distance() {
        let t = star(&[1.0, 1.0]);
        assert_eq!(t.tree_distance(0, 1).unwrap(), 2.0);
        assert_eq!(t.tree_distance(0, 0).unwrap(), 0.0);
        assert!(matches!(t.tree_distance(0, 7), Err(Error::Domain(_))));
    }

    #[test]
    fn depth_three_path_sums_four_weights() {
        // Leaves l1 and l2 sit under different depth-2 vertices sharing a
        // depth-1 ancestor: the path uses w_l1 + w_par(l1) + w_l2 + w_par(l2).
        let t = complete_tree(2, 3, 4.0, 2.0).unwrap();
        let l1 = t.leaf_vertex(1).unwrap();
        let l2 = t.leaf_vertex(3).unwrap();
        let p1 = t.parent(l1).unwrap();
        let p2 = t.parent(l2).unwrap();
        let expected = t.weight(l1) + t.weight(p1) + t.weight(l2) + t.weight(p2);
        assert_eq!(t.tree_distance(1, 3).unwrap(), expected);
        assert_eq!(expected, 1.0 + 2.0 + 1.0 + 2.0);
    }

    #[test]
    fn ratios() {
        let t = complete_tree(2, 2, 1.0, 2.0).unwrap();
        let r = t.leaf_count_ratios(1).unwrap();
        assert_eq!(r.theta, 0.5);
        assert!((r.eta - (1.0 + 2f64.ln())).abs() < 1e-15);
        assert!((r.delta - 0.5 / (1.0 + 2f64.ln())).abs() < 1e-15);
        assert!((r.delta - 0.2953).abs() < 1e-4);
        assert!(matches!(t.leaf_count_ratios(0), Err(Error::Domain(_))));

        let only = LeafRatios::from_counts(3, 3);
        assert_eq!((only.theta, only.eta, only.delta), (1.0, 1.0, 1.0));

        let quarter = LeafRatios::from_counts(1, 4);
        assert_eq!(quarter.theta, 0.25);
        assert!((quarter.eta - (1.0 + 4f64.ln())).abs() < 1e-15);
        assert!((quarter.delta - 0.25 / (1.0 + 4f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn internal_order_is_children_first() {
        let t = complete_tree(2, 3, 4.0, 2.0).unwrap();
        let order = t.internal_order();
        assert_eq!(order, &[3, 4, 5, 6, 1, 2, 0]);
        let pos = |v: usize| order.iter().position(|&x| x == v).unwrap();
        for &u in order {
            for &c in t.children(u) {
                if !t.is_leaf(c) {
                    assert!(pos(c) < pos(u));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_structure() {
        // weight growing towards the leaves
        let bad = HstTree::from_parts(
            vec![None, Some(0), Some(1)],
            vec![0.0, 1.0, 2.0],
            vec![None, None, Some(0)],
            2.0,
        );
        assert!(bad.is_err());
        // leaf without point
        let bad = HstTree::from_parts(vec![None, Some(0)], vec![0.0, 1.0], vec![None, None], 2.0);
        assert!(bad.is_err());
        // two roots
        let bad = HstTree::from_parts(vec![None, None], vec![0.0, 0.0], vec![Some(0), Some(1)], 2.0);
        assert!(bad.is_err());
        // tau <= 1
        let bad = HstTree::from_parts(vec![None], vec![0.0], vec![Some(0)], 1.0);
        assert!(matches!(bad, Err(Error::Parameter(_))));
    }

    #[test]
    fn single_leaf_tree() {
        let t = HstTree::from_parts(vec![None], vec![0.0], vec![Some(0)], 5.0).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert!(t.internal_order().is_empty());
        assert_eq!(t.tree_distance(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn accumulate_sums_subtrees() {
        let t = complete_tree(2, 2, 1.0, 2.0).unwrap();
        let z = t.accumulate(&[0.1, 0.2, 0.3, 0.4]);
        assert!((z[0] - 1.0).abs() < 1e-15);
        assert!((z[1] - 0.3).abs() < 1e-15);
        assert!((z[2] - 0.7).abs() < 1e-15);
    }
}
