//! Sparse Gaussian concentration matrices with left/right homolog symmetry.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: packed symmetric matrices, the hemisphere partition and the
//!   stacking operator used by the fused proximal step.
//! * [`solver`]: the symmetric graphical lasso (nested ADMM) and optimality checks.
//! * [`detrend`]: VAR(1), score-driven Student-t and Henderson detrending.
//! * [`select`]: colored (RCON) models, their maximum likelihood refit and
//!   BIC/eBIC grid selection.
//! * [`sim`]: synthetic ground truths, sampling, recovery metrics and the
//!   oracle-tuned benchmark.

pub mod detrend;
pub mod error;
pub mod linalg;
pub mod select;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{
    myvec, partial_stats, second_moment, soft_threshold, sym_eigen, HemispherePartition,
    PartialStats, StackedVector, SymMatrix,
};
pub use solver::{
    fit_sgl, kkt_check, objective, theta_update, SglProblem, SglSolution, SolverConfig,
    SolverState,
};
