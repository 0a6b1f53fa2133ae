//! Gaussian-process surrogate over action–context inputs.

mod grid;
mod kernel;
mod model;

pub use grid::PosteriorGrid;
pub use kernel::{AffineMap, Kernel};
pub use model::{BetaSchedule, GpConfig, GpModel, GpSnapshot, REFACTOR_EVERY, VARIANCE_CLAMP};
