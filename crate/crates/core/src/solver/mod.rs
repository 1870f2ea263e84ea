//! Tensor completion solvers.

mod hmrtc;
pub(crate) mod linalg;
pub(crate) mod observed;

pub use hmrtc::{
    init_state, relative_change, solve, FactorUpdate, HmrtcSolver, IterationRecord, SolveResult, SolverConfig,
    SolverState,
};
pub(crate) use hmrtc::{map_range, random_factors};
