//! Clamped nonlinear beam benchmark on `[-4,4] x (0,2]`.
//!
//! Discretization of
//! `g w_xxxx + 2 g_x w_xxx + g_xx w_xx + mu w_tt + G(w) = f(x, t)` with
//! `g = 2e^{-2x^2} + 1`, `mu = e^{-2x^2} + 1`,
//! `G(w) = (1 + 2e^{-2x^2}) w + (5 + e^{-3x^2}) w^3`, manufactured so that
//! `w*(x, t) = e^{-x^2 - t^2}` solves the continuous equation.
//!
//! Space uses the five-point central stencils
//! `w_xxxx ~ (1, -4, 6, -4, 1)/h^4` and `w_xxx ~ (-1, 2, 0, -2, 1)/(2h^3)`
//! (signs on `w_{i-2}..w_{i+2}`); time uses the backward stencil
//! `(w_j - 2 w_{j-1} + w_{j-2})/s^2`. Boundary closure: `w = 0` one point
//! outside each spatial end, mirror ghosts two points outside; in time the
//! initial condition `w(x, 0) = e^{-x^2}` fills level `j = -1` and level
//! `j = -2` mirrors `j = 0`.
//!
//! Unknown `m = j*n1 + i` is `w(x_i, t_j)` with `x_i = -4 + (i+1)h`,
//! `t_j = (j+1)s`, `h = 8/n1`, `s = 2/n2`. Rows couple at most 7 unknowns.

use super::{check_len, NonlinearProblem};
use crate::error::{Error, Result};

pub struct BeamProblem {
    n1: usize,
    n2: usize,
    h: f64,
    s: f64,
    x: Vec<f64>,
    t: Vec<f64>,
    g: Vec<f64>,
    gx: Vec<f64>,
    gxx: Vec<f64>,
    mu: Vec<f64>,
    lin: Vec<f64>,
    cub: Vec<f64>,
    /// w at t = 0 (level j = -1): e^{-x_i^2}.
    init: Vec<f64>,
    source: Vec<f64>,
}

/// `w*` and the derivatives of it that enter the manufactured source.
fn analytic_derivatives(x: f64, t: f64) -> (f64, f64, f64, f64) {
    let w = (-x * x - t * t).exp();
    let wxx = (4.0 * x * x - 2.0) * w;
    let wxxxx = (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * w;
    let wtt = (4.0 * t * t - 2.0) * w;
    // w_xxx is returned via the caller recomputing; keep the tuple small
    (w, wxx, wxxxx, wtt)
}

fn analytic_wxxx(x: f64, t: f64) -> f64 {
    (12.0 * x - 8.0 * x.powi(3)) * (-x * x - t * t).exp()
}

impl BeamProblem {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 3 || n2 < 2 {
            return Err(Error::InvalidInput(format!(
                "beam grid must be at least 3x2, got {n1}x{n2}"
            )));
        }
        let h = 8.0 / n1 as f64;
        let s = 2.0 / n2 as f64;
        let x: Vec<f64> = (0..n1).map(|i| -4.0 + (i as f64 + 1.0) * h).collect();
        let t: Vec<f64> = (0..n2).map(|j| (j as f64 + 1.0) * s).collect();
        let mut g = Vec::with_capacity(n1);
        let mut gx = Vec::with_capacity(n1);
        let mut gxx = Vec::with_capacity(n1);
        let mut mu = Vec::with_capacity(n1);
        let mut lin = Vec::with_capacity(n1);
        let mut cub = Vec::with_capacity(n1);
        let mut init = Vec::with_capacity(n1);
        for &xi in &x {
            let e2 = (-2.0 * xi * xi).exp();
            g.push(2.0 * e2 + 1.0);
            gx.push(-8.0 * xi * e2);
            gxx.push((32.0 * xi * xi - 8.0) * e2);
            mu.push(e2 + 1.0);
            lin.push(1.0 + 2.0 * e2);
            cub.push(5.0 + (-3.0 * xi * xi).exp());
            init.push((-xi * xi).exp());
        }
        let mut source = Vec::with_capacity(n1 * n2);
        for &tj in &t {
            for i in 0..n1 {
                let xi = x[i];
                let (w, wxx, wxxxx, wtt) = analytic_derivatives(xi, tj);
                let wxxx = analytic_wxxx(xi, tj);
                source.push(
                    g[i] * wxxxx + 2.0 * gx[i] * wxxx + gxx[i] * wxx + mu[i] * wtt
                        + lin[i] * w
                        + cub[i] * w * w * w,
                );
            }
        }
        Ok(BeamProblem { n1, n2, h, s, x, t, g, gx, gxx, mu, lin, cub, init, source })
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
        (-x * x - t * t).exp()
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

impl NonlinearProblem for BeamProblem {
    fn dim(&self) -> usize {
        self.n1 * self.n2
    }

    fn max_row_nnz(&self) -> usize {
        7
    }

    fn row_support(&self, m: usize, out: &mut Vec<usize>) {
        assert!(m < self.dim(), "row {m} out of range");
        let i = m % self.n1;
        let j = m / self.n1;
        out.clear();
        if j >= 2 {
            out.push(m - 2 * self.n1);
        }
        if j >= 1 {
            out.push(m - self.n1);
        }
        if i >= 2 {
            out.push(m - 2);
        }
        if i >= 1 {
            out.push(m - 1);
        }
        out.push(m);
        if i + 1 < self.n1 {
            out.push(m + 1);
        }
        if i + 2 < self.n1 {
            out.push(m + 2);
        }
    }

    fn column_adjacency(&self, k: usize, out: &mut Vec<usize>) {
        assert!(k < self.dim(), "column {k} out of range");
        let i = k % self.n1;
        let j = k / self.n1;
        out.clear();
        if i >= 2 {
            out.push(k - 2);
        }
        if i >= 1 {
            out.push(k - 1);
        }
        out.push(k);
        if i + 1 < self.n1 {
            out.push(k + 1);
        }
        if i + 2 < self.n1 {
            out.push(k + 2);
        }
        if j + 1 < self.n2 {
            out.push(k + self.n1);
        }
        if j + 2 < self.n2 {
            out.push(k + 2 * self.n1);
        }
    }

    fn eval_residual(&self, m: usize, support_values: &[f64]) -> Result<f64> {
        if m >= self.dim() {
            return Err(Error::IndexOutOfRange { index: m, dim: self.dim() });
        }
        let i = m % self.n1;
        let j = m / self.n1;
        let expected = 1
            + usize::from(j >= 2)
            + usize::from(j >= 1)
            + usize::from(i >= 2)
            + usize::from(i >= 1)
            + usize::from(i + 1 < self.n1)
            + usize::from(i + 2 < self.n1);
        check_len(m, support_values.len(), expected)?;

        let mut pos = 0;
        let mut take = |present: bool| -> Option<f64> {
            if present {
                pos += 1;
                Some(support_values[pos - 1])
            } else {
                None
            }
        };
        let vt2 = take(j >= 2);
        let vt1 = take(j >= 1);
        let vm2 = take(i >= 2);
        let vm1 = take(i >= 1);
        let w0 = take(true).unwrap();
        let vp1 = take(i + 1 < self.n1);
        let vp2 = take(i + 2 < self.n1);

        // time closure: level -1 is the initial condition, level -2 mirrors 0
        let wt1 = vt1.unwrap_or(self.init[i]);
        let wt2 = vt2.unwrap_or(if j == 1 { self.init[i] } else { w0 });
        // space closure: zero one point outside each end, mirror two outside
        let wm1 = vm1.unwrap_or(0.0);
        let wm2 = vm2.unwrap_or(if i == 1 { 0.0 } else { w0 });
        let wp1 = vp1.unwrap_or(0.0);
        let wp2 = vp2.unwrap_or(if i + 2 == self.n1 { 0.0 } else { w0 });

        let h = self.h;
        let s = self.s;
        let dxxxx = (wm2 - 4.0 * wm1 + 6.0 * w0 - 4.0 * wp1 + wp2) / (h * h * h * h);
        let dxxx = (wp2 - 2.0 * wp1 + 2.0 * wm1 - wm2) / (2.0 * h * h * h);
        let dxx = (wp1 - 2.0 * w0 + wm1) / (h * h);
        let dtt = (w0 - 2.0 * wt1 + wt2) / (s * s);
        Ok(self.g[i] * dxxxx + 2.0 * self.gx[i] * dxxx + self.gxx[i] * dxx
            + self.mu[i] * dtt
            + self.lin[i] * w0
            + self.cub[i] * w0 * w0 * w0
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
