use std::fmt::Write as _;

use super::potential::PotentialParams;
use super::state::CondState;
use crate::error::{Error, Result};
use crate::hst::HstTree;

/// Costs at every vertex: leaves carry the supplied costs, internal vertices
/// the `q_new`-weighted average of their children.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexCosts {
    cost: Vec<f64>,
}

impl VertexCosts {
    pub fn as_slice(&self) -> &[f64] {
        &self.cost
    }

    pub fn root_cost(&self, tree: &HstTree) -> f64 {
        self.cost[tree.root()]
    }
}

/// One vertex visit of the recursion.
#[derive(Clone, Debug)]
pub struct TraceEntry {
    pub order: usize,
    pub vertex: usize,
    pub children: Vec<usize>,
    pub child_costs: Vec<f64>,
    pub q_before: Vec<f64>,
    pub q_after: Vec<f64>,
    pub cost: f64,
}

/// Record of the vertex visits of one step, in execution order.
#[derive(Clone, Debug, Default)]
pub struct StepTrace {
    pub entries: Vec<TraceEntry>,
}

impl StepTrace {
    /// CSV with one row per (vertex, child).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,vertex,child,child_cost,q_before,q_after,vertex_cost\n");
        for e in &self.entries {
            for (k, c) in e.children.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    e.order, e.vertex, c, e.child_costs[k], e.q_before[k], e.q_after[k], e.cost
                );
            }
        }
        out
    }
}

/// One mirror-descent step over the whole tree.
///
/// `leaf_costs` is indexed by point. Internal vertices are visited children
/// before parents, so each update sees final child costs.
pub fn md_step(
    tree: &HstTree,
    params: &PotentialParams,
    q_prev: &CondState,
    leaf_costs: &[f64],
) -> Result<(CondState, VertexCosts)> {
    run(tree, params, q_prev, leaf_costs, None)
}

/// [`md_step`] that also records every vertex visit.
pub fn md_step_traced(
    tree: &HstTree,
    params: &PotentialParams,
    q_prev: &CondState,
    leaf_costs: &[f64],
) -> Result<(CondState, VertexCosts, StepTrace)> {
    let mut trace = StepTrace::default();
    let (q, c) = run(tree, params, q_prev, leaf_costs, Some(&mut trace))?;
    Ok((q, c, trace))
}

fn run(
    tree: &HstTree,
    params: &PotentialParams,
    q_prev: &CondState,
    leaf_costs: &[f64],
    mut trace: Option<&mut StepTrace>,
) -> Result<(CondState, VertexCosts)> {
    if leaf_costs.len() != tree.n_leaves() {
        return Err(Error::input(format!(
            "{} leaf costs for {} leaves",
            leaf_costs.len(),
            tree.n_leaves()
        )));
    }
    if let Some(p) = leaf_costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::input(format!("leaf cost of point {p} is not finite")));
    }
    let prev = q_prev.as_slice();
    if prev.len() != tree.n_vertices() {
        return Err(Error::input("conditional state does not match the tree"));
    }
    let mut cost = vec![0.0; tree.n_vertices()];
    for (p, &c) in leaf_costs.iter().enumerate() {
        cost[tree.leaf_vertex(p)?] = c;
    }
    let mut q = prev.to_vec();
    for (order, &u) in tree.internal_order().iter().enumerate() {
        let children = tree.children(u);
        let child_costs: Vec<f64> = children.iter().map(|&c| cost[c]).collect();
        let before: Vec<f64> = children.iter().map(|&c| prev[c]).collect();
        let after = params.md_update_vertex(u, &before, &child_costs)?;
        let mut cu = 0.0;
        for (k, &c) in children.iter().enumerate() {
            q[c] = after[k];
            cu += after[k] * child_costs[k];
        }
        cost[u] = cu;
        if let Some(t) = trace.as_deref_mut() {
            t.entries.push(TraceEntry {
                order,
                vertex: u,
                children: children.to_vec(),
                child_costs,
                q_before: before,
                q_after: after,
                cost: cu,
            });
        }
    }
    q[tree.root()] = 1.0;
    Ok((CondState::from_raw(q), VertexCosts { cost }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hst::complete_tree;
    use crate::mts::state::delta_map;

    fn setup() -> (HstTree, PotentialParams) {
        let t = complete_tree(2, 3, 4.0, 2.0).unwrap();
        let p = PotentialParams::new(&t, 1.0).unwrap();
        (t, p)
    }

    #[test]
    fn zero_costs_keep_state() {
        let (t, p) = setup();
        let q0 = CondState::new(&t, {
            let mut q = CondState::uniform(&t).as_slice().to_vec();
            q[1] = 0.3;
            q[2] = 0.7;
            q
        })
        .unwrap();
        let (q, c) = md_step(&t, &p, &q0, &[0.0; 8]).unwrap();
        for (a, b) in q.as_slice().iter().zip(q0.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(c.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn root_cost_is_expected_leaf_cost() {
        let (t, p) = setup();
        let costs = [0.3, 1.2, 0.0, 2.5, 0.7, 0.7, 1.9, 0.1];
        let (q, c) = md_step(&t, &p, &CondState::uniform(&t), &costs).unwrap();
        let probs = delta_map(&t, &q).leaf_probs(&t);
        let expected: f64 = probs.iter().zip(costs).map(|(a, b)| a * b).sum();
        assert!((c.root_cost(&t) - expected).abs() < 1e-12);
    }

    #[test]
    fn trace_follows_children_first_order() {
        let (t, p) = setup();
        let costs = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0];
        let (_, _, trace) = md_step_traced(&t, &p, &CondState::uniform(&t), &costs).unwrap();
        let order: Vec<usize> = trace.entries.iter().map(|e| e.vertex).collect();
        assert_eq!(order, vec![3, 4, 5, 6, 1, 2, 0]);
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), 1 + 14);
    }

    #[test]
    fn rejects_bad_input() {
        let (t, p) = setup();
        let q0 = CondState::uniform(&t);
        assert!(md_step(&t, &p, &q0, &[0.0; 7]).is_err());
        let mut c = [0.0; 8];
        c[3] = f64::INFINITY;
        assert!(md_step(&t, &p, &q0, &c).is_err());
    }
}
