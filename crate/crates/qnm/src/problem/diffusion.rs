//! Nonlinear advection-diffusion benchmark on `[-1,1] x (0,1]`.
//!
//! Upwind/backward-Euler discretization of
//! `u_t + (1 - x sin u) u_x = f(x, t)` with `u(-1, t) = 0` and
//! `u(x, 0) = x^2 - 1`. The source is manufactured so that
//! `u*(x, t) = e^{2t} (x^2 - 1)` solves the continuous equation.
//!
//! Unknown `m = j*n1 + i` is `u(x_i, t_j)` with `x_i = -1 + (i+1)h`,
//! `t_j = (j+1)s`. Each row couples at most the point itself, its left
//! neighbor, and its past neighbor, so the system is lower triangular.

use super::{check_len, NonlinearProblem};
use crate::error::{Error, Result};

pub struct DiffusionProblem {
    n1: usize,
    n2: usize,
    h: f64,
    s: f64,
    x: Vec<f64>,
    t: Vec<f64>,
    /// u at t = 0 (row j = -1): x_i^2 - 1.
    init: Vec<f64>,
    source: Vec<f64>,
}

impl DiffusionProblem {
    /// Grid of `n1` space points by `n2` time levels.
    ///
    /// `fixed_source` selects the manufactured source consistent with the
    /// analytic solution; with `false` the sine argument in the source uses
    /// the constant `e^2 - 1` in place of `x^2 - 1` (a published variant),
    /// which no longer matches `u*` exactly.
    pub fn new(n1: usize, n2: usize, fixed_source: bool) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::InvalidInput(format!(
                "diffusion grid must be at least 2x2, got {n1}x{n2}"
            )));
        }
        let h = 2.0 / n1 as f64;
        let s = 1.0 / n2 as f64;
        let x: Vec<f64> = (0..n1).map(|i| -1.0 + (i as f64 + 1.0) * h).collect();
        let t: Vec<f64> = (0..n2).map(|j| (j as f64 + 1.0) * s).collect();
        let init: Vec<f64> = x.iter().map(|&xi| xi * xi - 1.0).collect();
        let mut source = Vec::with_capacity(n1 * n2);
        for &tj in &t {
            let e2t = (2.0 * tj).exp();
            for &xi in &x {
                let arg = if fixed_source {
                    e2t * (xi * xi - 1.0)
                } else {
                    e2t * (std::f64::consts::E.powi(2) - 1.0)
                };
                source.push(2.0 * e2t * (xi * xi - 1.0 + xi - xi * xi * arg.sin()));
            }
        }
        Ok(DiffusionProblem { n1, n2, h, s, x, t, init, source })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn x_coord(&self, i: usize) -> f64 {
        self.x[i]
    }

    pub fn t_coord(&self, j: usize) -> f64 {
        self.t[j]
    }

    /// Exact continuous solution the source was manufactured for.
    pub fn analytic(&self, x: f64, t: f64) -> f64 {
        (2.0 * t).exp() * (x * x - 1.0)
    }

    /// The exact solution sampled on the grid, in unknown order.
    pub fn analytic_field(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.n1 * self.n2);
        for &tj in &self.t {
            for &xi in &self.x {
                w.push(self.analytic(xi, tj));
            }
        }
        w
    }
}

impl NonlinearProblem for DiffusionProblem {
    fn dim(&self) -> usize {
        self.n1 * self.n2
    }

    fn max_row_nnz(&self) -> usize {
        3
    }

    fn row_support(&self, m: usize, out: &mut Vec<usize>) {
        assert!(m < self.dim(), "row {m} out of range");
        let i = m % self.n1;
        let j = m / self.n1;
        out.clear();
        if j > 0 {
            out.push(m - self.n1);
        }
        if i > 0 {
            out.push(m - 1);
        }
        out.push(m);
    }

    fn column_adjacency(&self, k: usize, out: &mut Vec<usize>) {
        assert!(k < self.dim(), "column {k} out of range");
        let i = k % self.n1;
        out.clear();
        out.push(k);
        if i + 1 < self.n1 {
            out.push(k + 1);
        }
        if k + self.n1 < self.dim() {
            out.push(k + self.n1);
        }
    }

    fn eval_residual(&self, m: usize, support_values: &[f64]) -> Result<f64> {
        if m >= self.dim() {
            return Err(Error::IndexOutOfRange { index: m, dim: self.dim() });
        }
        let i = m % self.n1;
        let j = m / self.n1;
        let expected = 1 + usize::from(i > 0) + usize::from(j > 0);
        check_len(m, support_values.len(), expected)?;
        let mut pos = 0;
        let u_past = if j > 0 {
            pos += 1;
            support_values[pos - 1]
        } else {
            self.init[i]
        };
        let u_left = if i > 0 {
            pos += 1;
            support_values[pos - 1]
        } else {
            0.0
        };
        let u = support_values[pos];
        let xi = self.x[i];
        Ok((u - u_past) / self.s + (1.0 - xi * u.sin()) * (u - u_left) / self.h
            - self.source[m])
    }

    fn initial_guess(&self) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.dim());
        for _ in 0..self.n2 {
            g.extend_from_slice(&self.init);
        }
        g
    }
}
