//! SMT-LIB lowering and solver interaction.

pub mod lower;
pub mod model;
pub mod sexp;
pub mod solver;

use std::time::Duration;

pub use lower::{lower, lower_with, LowerOptions, LoweredScript};
pub use model::{CounterModel, Sample};
pub use solver::{check, SolverConfig, SolverError, SolverVerdict};

use crate::vcgen::Goal;

/// Lowers and checks a goal with default options.
pub fn discharge(goal: &Goal, cfg: &SolverConfig, timeout: Duration) -> Result<SolverVerdict, SolverError> {
    check(&lower(goal), cfg, timeout)
}
