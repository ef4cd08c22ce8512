//! Tiny stand-in systems shared by unit tests across modules.

use crate::error::Result;
use crate::problem::NonlinearProblem;

/// One unknown, `F(x) = x^2 - target`. Newton iterates from `guess` are
/// hand-checkable (target 2, guess 1: 1.5, 1.41666.., 1.4142156..).
pub(crate) struct ScalarSquare {
    pub target: f64,
    pub guess: f64,
}

impl NonlinearProblem for ScalarSquare {
    fn dim(&self) -> usize {
        1
    }

    fn max_row_nnz(&self) -> usize {
        1
    }

    fn row_support(&self, m: usize, out: &mut Vec<usize>) {
        assert!(m < 1, "row {m} out of range");
        out.clear();
        out.push(0);
    }

    fn column_adjacency(&self, k: usize, out: &mut Vec<usize>) {
        assert!(k < 1, "column {k} out of range");
        out.clear();
        out.push(0);
    }

    fn eval_residual(&self, _m: usize, support_values: &[f64]) -> Result<f64> {
        Ok(support_values[0] * support_values[0] - self.target)
    }

    fn initial_guess(&self) -> Vec<f64> {
        vec![self.guess]
    }
}

/// One unknown, `F(x) = sign(x) |x|^(1/3)`. Newton maps x to -2x, so the
/// iterates and the residual grow without bound: exercises divergence
/// handling.
pub(crate) struct CubeRoot {
    pub guess: f64,
}

impl NonlinearProblem for CubeRoot {
    fn dim(&self) -> usize {
        1
    }

    fn max_row_nnz(&self) -> usize {
        1
    }

    fn row_support(&self, m: usize, out: &mut Vec<usize>) {
        assert!(m < 1, "row {m} out of range");
        out.clear();
        out.push(0);
    }

    fn column_adjacency(&self, k: usize, out: &mut Vec<usize>) {
        assert!(k < 1, "column {k} out of range");
        out.clear();
        out.push(0);
    }

    fn eval_residual(&self, _m: usize, support_values: &[f64]) -> Result<f64> {
        let x = support_values[0];
        Ok(x.signum() * x.abs().cbrt())
    }

    fn initial_guess(&self) -> Vec<f64> {
        vec![self.guess]
    }
}
