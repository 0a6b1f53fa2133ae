use std::fmt::Write as _;

use crate::error::Result;
use crate::hst::complete_tree;
use crate::mts::{delta_map, md_step_traced, CondState, PotentialParams, StepTrace};

/// Leaf costs of the walkthrough on the 8-leaf binary tree.
pub const DEMO_COSTS: [f64; 8] = [0.3, 1.2, 0.0, 2.5, 0.7, 0.7, 1.9, 0.1];

pub struct DemoOutput {
    pub trace: StepTrace,
    pub leaf_probs: Vec<f64>,
    pub text: String,
}

/// One mirror-descent step on a depth-3 binary tree from uniform
/// conditionals, visiting the seven internal vertices children first.
pub fn mts_demo(kappa: f64, costs: Option<&[f64]>) -> Result<DemoOutput> {
    let tree = complete_tree(2, 3, 4.0, 2.0)?;
    let params = PotentialParams::new(&tree, kappa)?;
    let costs = costs.unwrap_or(&DEMO_COSTS);
    let q0 = CondState::uniform(&tree);
    let (q, vc, trace) = md_step_traced(&tree, &params, &q0, costs)?;
    let leaf_probs = delta_map(&tree, &q).leaf_probs(&tree);

    let mut text = String::new();
    let _ = writeln!(text, "leaf costs: {costs:?}");
    for e in &trace.entries {
        let _ = writeln!(
            text,
            "u{} (vertex {}): children {:?} costs {:?} q {:?} -> {:?}; cost {:.6}",
            e.order + 1,
            e.vertex,
            e.children,
            e.child_costs,
            e.q_before,
            e.q_after.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>(),
            e.cost
        );
    }
    let _ = writeln!(text, "root cost {:.6}", vc.root_cost(&tree));
    let _ = writeln!(
        text,
        "leaf distribution {:?}",
        leaf_probs.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>()
    );
    Ok(DemoOutput {
        trace,
        leaf_probs,
        text,
    })
}
