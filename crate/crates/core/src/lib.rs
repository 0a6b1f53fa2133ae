//! Movement-penalized contextual Bayesian optimization: GP confidence bounds
//! on an unknown service cost, mirror descent on a tree embedding of the
//! action space, and tree optimal transport for sampling actions.

pub mod awe;
pub mod bench;
pub mod energy;
pub mod error;
pub mod frt;
pub mod gp;
pub mod harness;
pub mod hst;
pub mod metric;
pub mod mts;
pub mod policy;
pub mod rng;
pub mod sim;
pub mod synth;
pub mod task;
pub mod transport;
pub mod wind;

pub use error::{Error, Result};
