//! Greedy sign optimisation of a y-field counterdiabatic term for fast
//! quantum annealing of Ising problems, with quantum and simulated annealing
//! baselines and the statistics used to compare them.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dynamics;
pub mod error;
pub mod measures;
pub mod model;
pub mod qgo;

pub use error::{QgoError, Result};
