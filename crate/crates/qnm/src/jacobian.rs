//! Finite-difference Jacobians in compressed sparse row form, with the
//! normalization used by the sampled solver.
//!
//! `assemble` builds `A = F'(x)/f_max` and `b = F(x)` from a problem and the
//! norm tree holding the current iterate, where `f_max` is the realized
//! largest Jacobian magnitude. After scaling, `max |A_mk| = 1` exactly.

use crate::error::{Error, Result};
use crate::norm_tree::NormTree;
use crate::problem::NonlinearProblem;

/// Square sparse matrix, compressed sparse row, columns ascending per row.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub struct SparseBuilder {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseBuilder {
    pub fn new(dim: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        SparseBuilder { dim, row_ptr, cols: Vec::new(), vals: Vec::new() }
    }

    /// Appends the next row. Columns must be strictly ascending and in range;
    /// values must be finite and aligned with `cols`.
    pub fn push_row(&mut self, cols: &[usize], vals: &[f64]) -> Result<()> {
        if self.row_ptr.len() > self.dim {
            return Err(Error::InvalidInput("more rows than the declared dimension".into()));
        }
        if cols.len() != vals.len() {
            return Err(Error::DimensionMismatch { expected: cols.len(), got: vals.len() });
        }
        if !cols.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("row columns must be strictly ascending".into()));
        }
        if let Some(&c) = cols.last() {
            if c >= self.dim {
                return Err(Error::IndexOutOfRange { index: c, dim: self.dim });
            }
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sparse matrix entry"));
        }
        self.cols.extend_from_slice(cols);
        self.vals.extend_from_slice(vals);
        self.row_ptr.push(self.cols.len());
        Ok(())
    }

    pub fn finish(self) -> Result<SparseMatrix> {
        if self.row_ptr.len() != self.dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.row_ptr.len() - 1,
            });
        }
        Ok(SparseMatrix {
            dim: self.dim,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        })
    }
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, m: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[m];
        let hi = self.row_ptr[m + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    /// Entry (m, k), zero when absent from the pattern.
    pub fn get(&self, m: usize, k: usize) -> f64 {
        let (cols, vals) = self.row(m);
        match cols.binary_search(&k) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        for m in 0..self.dim {
            let (cols, vals) = self.row(m);
            out[m] = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn matvec_transpose(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        for m in 0..self.dim {
            let (cols, vals) = self.row(m);
            for (&c, &v) in cols.iter().zip(vals) {
                out[c] += v * x[m];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// (lower, upper) bandwidths of the stored pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for m in 0..self.dim {
            let (cols, _) = self.row(m);
            if let Some(&first) = cols.first() {
                kl = kl.max(m.saturating_sub(first));
            }
            if let Some(&last) = cols.last() {
                ku = ku.max(last.saturating_sub(m));
            }
        }
        (kl, ku)
    }

    /// True when every stored entry matches its transpose within
    /// `tol * max_abs()`.
    pub fn symmetric_within(&self, tol: f64) -> bool {
        let bound = tol * self.max_abs();
        for m in 0..self.dim {
            let (cols, vals) = self.row(m);
            for (&c, &v) in cols.iter().zip(vals) {
                if (v - self.get(c, m)).abs() > bound {
                    return false;
                }
            }
        }
        true
    }
}

/// Finite-difference step for differentiating at coordinate value `x`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.sqrt() * x.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DifferenceScheme {
    Forward,
    Central,
}

/// Forward-difference partial `dF_m/dx_k` at explicit step size.
///
/// `support`/`values` describe `x` on `S(m)` in row-support order; `k` must
/// be a member of the support.
pub fn fd_partial(
    problem: &dyn NonlinearProblem,
    m: usize,
    k: usize,
    support: &[usize],
    values: &[f64],
    step: f64,
) -> Result<f64> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {step}")));
    }
    let pos = support
        .iter()
        .position(|&c| c == k)
        .ok_or(Error::IndexOutOfRange { index: k, dim: problem.dim() })?;
    let base = problem.eval_residual(m, values)?;
    let mut shifted = values.to_vec();
    shifted[pos] += step;
    let bumped = problem.eval_residual(m, &shifted)?;
    Ok((bumped - base) / step)
}

/// The scaled linear model at the current iterate.
pub struct ScaledSystem {
    /// `F'(x) / f_max`.
    pub a: SparseMatrix,
    /// Raw residual `F(x)`.
    pub b: Vec<f64>,
    /// `‖F(x)‖₂`.
    pub c_b: f64,
    /// Largest Jacobian magnitude before scaling.
    pub f_max: f64,
}

/// Differentiates every row of the problem at the iterate held in `tree`,
/// using the tree's residual values as the forward-difference base so `A`
/// and `b` describe the same point.
pub fn assemble(
    problem: &dyn NonlinearProblem,
    tree: &NormTree,
    scheme: DifferenceScheme,
) -> Result<ScaledSystem> {
    let n = problem.dim();
    if tree.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: tree.dim() });
    }
    let x = tree.x();
    let mut builder = SparseBuilder::new(n);
    let mut support = Vec::with_capacity(problem.max_row_nnz());
    let mut values = Vec::with_capacity(problem.max_row_nnz());
    let mut shifted = Vec::with_capacity(problem.max_row_nnz());
    let mut row_vals = Vec::with_capacity(problem.max_row_nnz());
    let mut f_max = 0.0f64;
    for m in 0..n {
        problem.row_support(m, &mut support);
        values.clear();
        values.extend(support.iter().map(|&k| x[k]));
        let base = tree.get_f(m)?;
        row_vals.clear();
        for pos in 0..support.len() {
            let step = fd_step(values[pos]);
            shifted.clear();
            shifted.extend_from_slice(&values);
            shifted[pos] += step;
            let up = problem.eval_residual(m, &shifted)?;
            let d = match scheme {
                DifferenceScheme::Forward => (up - base) / step,
                DifferenceScheme::Central => {
                    shifted[pos] = values[pos] - step;
                    let down = problem.eval_residual(m, &shifted)?;
                    (up - down) / (2.0 * step)
                }
            };
            if !d.is_finite() {
                return Err(Error::NonFinite("jacobian entry"));
            }
            f_max = f_max.max(d.abs());
            row_vals.push(d);
        }
        builder.push_row(&support, &row_vals)?;
    }
    if f_max == 0.0 {
        return Err(Error::InvalidInput("jacobian is identically zero".into()));
    }
    let mut a = builder.finish()?;
    for v in &mut a.vals {
        *v /= f_max;
    }
    Ok(ScaledSystem { a, b: tree.f().to_vec(), c_b: tree.partial_norm_f(0, 0)?, f_max })
}
