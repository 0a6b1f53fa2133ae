//! Mirror descent on the tree polytope.

mod potential;
mod state;
mod step;

pub use potential::{PotentialParams, VertexSolution, MAX_ITERATIONS, SIMPLEX_TOLERANCE, SLACKNESS_TOLERANCE};
pub use state::{delta_inverse, delta_map, CondState, TreeState, STATE_TOLERANCE};
pub use step::{md_step, md_step_traced, StepTrace, TraceEntry, VertexCosts};
