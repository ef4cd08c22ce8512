//! Sparse nonlinear systems F(x) = 0 with row-local structure.
//!
//! A problem exposes each residual component `F_m` as a function of the few
//! unknowns in its support `S(m)`, so a solver never needs the full vector
//! to evaluate or differentiate one row.

mod beam;
mod diffusion;

pub use beam::BeamProblem;
pub use diffusion::DiffusionProblem;

use crate::error::{Error, Result};

/// A square system F: R^N -> R^N with sparse rows.
pub trait NonlinearProblem: Send + Sync {
    /// Number of unknowns (= number of residual components).
    fn dim(&self) -> usize;

    /// Upper bound on `|S(m)|` over all rows (the sparsity `d`).
    fn max_row_nnz(&self) -> usize;

    /// Writes the support `S(m)` of row `m` into `out`, ascending.
    ///
    /// Panics if `m >= dim()`; callers index rows they obtained from `dim()`.
    fn row_support(&self, m: usize, out: &mut Vec<usize>);

    /// Writes the rows whose support contains column `k` into `out`,
    /// ascending. Panics if `k >= dim()`.
    fn column_adjacency(&self, k: usize, out: &mut Vec<usize>);

    /// Evaluates `F_m` given the values of `x` on `S(m)`, in the exact order
    /// produced by [`row_support`](Self::row_support).
    fn eval_residual(&self, m: usize, support_values: &[f64]) -> Result<f64>;

    /// Starting iterate for the solver.
    fn initial_guess(&self) -> Vec<f64>;
}

/// Evaluates the full residual vector at `x`.
pub fn residual_vector(problem: &dyn NonlinearProblem, x: &[f64]) -> Result<Vec<f64>> {
    let n = problem.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let mut support = Vec::with_capacity(problem.max_row_nnz());
    let mut values = Vec::with_capacity(problem.max_row_nnz());
    let mut f = Vec::with_capacity(n);
    for m in 0..n {
        problem.row_support(m, &mut support);
        values.clear();
        values.extend(support.iter().map(|&k| x[k]));
        f.push(problem.eval_residual(m, &values)?);
    }
    Ok(f)
}

/// Checks that a support slice matches the expected value count for row `m`.
pub(crate) fn check_support_len(m: usize, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::InvalidInput(format!(
            "row {m}: expected {expected} support values, got {got}"
        )));
    }
    Ok(())
}

pub(crate) use check_support_len as check_len;
