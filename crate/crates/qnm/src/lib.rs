//! Inexact Newton iteration for sparse nonlinear systems where the
//! correction direction is read out through a simulated finite-shot
//! sampling channel, plus a cost model for running that readout on
//! quantum hardware.
//!
//! The pieces, bottom up:
//!
//! - [`norm_tree`]: a binary tree over the squared entries of the iterate
//!   and residual, giving O(log N) norm queries and incremental updates.
//! - [`problem`]: the [`problem::NonlinearProblem`] trait for systems with
//!   row-local structure, and two built-in PDE marching problems.
//! - [`jacobian`]: finite-difference assembly of the scaled system
//!   `A = F' / f_max`, `b = F`.
//! - [`linsolve`]: banded Gaussian elimination without pivoting, a stored
//!   factorization, a condition estimator, and conjugate gradients.
//! - [`tomography`]: the sampling channel that reconstructs a unit vector
//!   from finitely many shots.
//! - [`solver`]: the Newton loop in exact and sampled variants.
//! - [`resource`]: query counts and wall-time scalings for the hardware
//!   analogue of one correction step.
//!
//! ```
//! use qnm::{newton_solve, BeamProblem, NonlinearProblem};
//!
//! let problem = BeamProblem::new(8, 8).unwrap();
//! let trace = newton_solve(&problem, &problem.initial_guess(), 1e-8, 50).unwrap();
//! assert!(trace.converged);
//! ```

pub mod cli;
pub mod error;
pub mod jacobian;
pub mod linsolve;
pub mod norm_tree;
pub mod problem;
pub mod resource;
pub mod solver;
pub mod tomography;

#[cfg(test)]
pub(crate) mod test_problems;

pub use error::{Error, Result};
pub use norm_tree::{LeafKind, LeafUpdate, NormTree};
pub use problem::{BeamProblem, DiffusionProblem, NonlinearProblem};
pub use solver::{
    newton_solve, newton_solve_with, qnm_solve, qnm_solve_with, IterationRecord, RunTrace,
    SolveOptions,
};
pub use tomography::{
    sample_linf, shots_for, ChannelMode, SampledVector, SignMode, TomographyConfig,
};
