//! Direct and iterative solvers for the band-sparse systems produced by
//! `jacobian::assemble`.
//!
//! `lu_solve` runs banded Gaussian elimination without pivoting (the grid
//! orderings here keep it stable) in a single streaming pass: each L
//! multiplier is applied to the right-hand side the moment it is produced
//! and then dropped, so only the U band of shape `n x (ku+1)` is stored.
//! Triangular systems short-circuit to substitution on the sparse rows.
//! `BandLu` keeps L as well, for the repeated solves and transpose solves
//! behind `estimate_kappa`.

use crate::error::{Error, Result};
use crate::jacobian::SparseMatrix;

#[derive(Clone, Debug)]
pub struct LinearSolveReport {
    /// Solution vector of `A x = rhs`.
    pub delta_x: Vec<f64>,
    /// `‖A x − rhs‖₂` of the returned solution.
    pub residual_norm: f64,
    pub factor_seconds: f64,
}

fn check_system(a: &SparseMatrix, rhs: &[f64]) -> Result<()> {
    if rhs.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: rhs.len() });
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    Ok(())
}

fn residual_norm(a: &SparseMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.dim()];
    a.matvec(x, &mut ax);
    ax.iter()
        .zip(rhs)
        .map(|(&axm, &bm)| (axm - bm) * (axm - bm))
        .sum::<f64>()
        .sqrt()
}

/// Solves `A x = rhs` by band elimination without pivoting.
///
/// A pivot with `|p| <= max_abs(A) * f64::EPSILON` raises
/// [`Error::SingularSystem`] with the offending row.
pub fn lu_solve(a: &SparseMatrix, rhs: &[f64]) -> Result<LinearSolveReport> {
    check_system(a, rhs)?;
    let start = std::time::Instant::now();
    let n = a.dim();
    let pivot_tol = a.max_abs() * f64::EPSILON;
    let (kl, ku) = a.bandwidths();
    let mut y = rhs.to_vec();
    if ku == 0 {
        forward_substitute(a, &mut y, pivot_tol)?;
    } else if kl == 0 {
        back_substitute_sparse(a, &mut y, pivot_tol)?;
    } else {
        let mut u = vec![0.0; n * (ku + 1)];
        eliminate_band(a, kl, ku, pivot_tol, &mut y, &mut u, None)?;
        back_substitute_band(&u, ku, &mut y);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear solve"));
    }
    let factor_seconds = start.elapsed().as_secs_f64();
    let res = residual_norm(a, &y, rhs);
    Ok(LinearSolveReport { delta_x: y, residual_norm: res, factor_seconds })
}

/// In-place forward substitution for a lower-triangular sparse matrix.
fn forward_substitute(a: &SparseMatrix, y: &mut [f64], pivot_tol: f64) -> Result<()> {
    for m in 0..a.dim() {
        let (cols, vals) = a.row(m);
        let mut sum = 0.0;
        let mut piv = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            if c == m {
                piv = v;
            } else {
                sum += v * y[c];
            }
        }
        if piv.abs() <= pivot_tol {
            return Err(Error::SingularSystem { row: m });
        }
        y[m] = (y[m] - sum) / piv;
    }
    Ok(())
}

/// In-place back substitution for an upper-triangular sparse matrix.
fn back_substitute_sparse(a: &SparseMatrix, y: &mut [f64], pivot_tol: f64) -> Result<()> {
    for m in (0..a.dim()).rev() {
        let (cols, vals) = a.row(m);
        let mut sum = 0.0;
        let mut piv = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            if c == m {
                piv = v;
            } else {
                sum += v * y[c];
            }
        }
        if piv.abs() <= pivot_tol {
            return Err(Error::SingularSystem { row: m });
        }
        y[m] = (y[m] - sum) / piv;
    }
    Ok(())
}

/// Band elimination core. Transforms `y` by L as multipliers appear, fills
/// `u` with the U band (row m at `u[m*(ku+1)..]`, diagonal first), and
/// optionally records L (row m at `l[m*kl..]`, columns `m-kl..m`).
fn eliminate_band(
    a: &SparseMatrix,
    kl: usize,
    ku: usize,
    pivot_tol: f64,
    y: &mut [f64],
    u: &mut [f64],
    mut l: Option<&mut [f64]>,
) -> Result<()> {
    let n = a.dim();
    let width = kl + ku + 1;
    let uw = ku + 1;
    // w holds the active row over columns m-kl ..= m+ku
    let mut w = vec![0.0; width];
    for m in 0..n {
        let (cols, vals) = a.row(m);
        for (&c, &v) in cols.iter().zip(vals) {
            w[c + kl - m] = v;
        }
        let lo = m.saturating_sub(kl);
        for c in lo..m {
            let wpos = c + kl - m;
            let mult = w[wpos] / u[c * uw];
            w[wpos] = 0.0;
            if let Some(lmat) = l.as_deref_mut() {
                lmat[m * kl + (c + kl - m)] = mult;
            }
            if mult == 0.0 {
                continue;
            }
            for t in 1..=ku {
                w[wpos + t] -= mult * u[c * uw + t];
            }
            y[m] -= mult * y[c];
        }
        let piv = w[kl];
        if !piv.is_finite() {
            return Err(Error::NonFinite("elimination pivot"));
        }
        if piv.abs() <= pivot_tol {
            return Err(Error::SingularSystem { row: m });
        }
        u[m * uw..(m + 1) * uw].copy_from_slice(&w[kl..kl + uw]);
        w[kl..].fill(0.0);
    }
    Ok(())
}

/// In-place back substitution with a stored U band.
fn back_substitute_band(u: &[f64], ku: usize, y: &mut [f64]) {
    let n = y.len();
    let uw = ku + 1;
    for m in (0..n).rev() {
        let mut sum = 0.0;
        for t in 1..=ku.min(n - 1 - m) {
            sum += u[m * uw + t] * y[m + t];
        }
        y[m] = (y[m] - sum) / u[m * uw];
    }
}

/// Stored band factorization A = LU (L unit-diagonal), for repeated solves
/// with A and its transpose. Memory is `n*(kl + ku + 1)` floats.
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    l: Vec<f64>,
    u: Vec<f64>,
}

impl BandLu {
    pub fn factor(a: &SparseMatrix) -> Result<BandLu> {
        let n = a.dim();
        let pivot_tol = a.max_abs() * f64::EPSILON;
        let (kl, ku) = a.bandwidths();
        let mut u = vec![0.0; n * (ku + 1)];
        let mut l = vec![0.0; n * kl];
        let mut y = vec![0.0; n];
        eliminate_band(a, kl, ku, pivot_tol, &mut y, &mut u, Some(&mut l))?;
        Ok(BandLu { n, kl, ku, l, u })
    }

    /// Solves `A x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: rhs.len() });
        }
        let mut y = rhs.to_vec();
        for m in 0..self.n {
            let lo = m.saturating_sub(self.kl);
            let mut sum = 0.0;
            for c in lo..m {
                sum += self.l[m * self.kl + (c + self.kl - m)] * y[c];
            }
            y[m] -= sum;
        }
        back_substitute_band(&self.u, self.ku, &mut y);
        Ok(y)
    }

    /// Solves `Aᵀ x = rhs` using the same factors: `Uᵀ z = rhs`, `Lᵀ x = z`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: rhs.len() });
        }
        let uw = self.ku + 1;
        let mut z = vec![0.0; self.n];
        for m in 0..self.n {
            let mut sum = 0.0;
            for t in 1..=self.ku.min(m) {
                sum += self.u[(m - t) * uw + t] * z[m - t];
            }
            z[m] = (rhs[m] - sum) / self.u[m * uw];
        }
        for m in (0..self.n).rev() {
            let hi = (m + self.kl).min(self.n - 1);
            let mut acc = 0.0;
            for r in m + 1..=hi {
                acc += self.l[r * self.kl + (m + self.kl - r)] * z[r];
            }
            z[m] -= acc;
        }
        Ok(z)
    }
}

pub struct KappaEstimate {
    pub kappa: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub converged: bool,
}

// successive Rayleigh quotients converge geometrically at the squared
// eigenvalue-gap ratio; a loose tolerance stalls far from the extreme when
// the spectrum clusters, so the cutoff is kept tight and the iteration cap
// generous
const KAPPA_REL_TOL: f64 = 1e-8;
const KAPPA_MAX_ITERS: usize = 10_000;

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in v.iter_mut() {
            *a /= norm;
        }
    }
    norm
}

/// Power iteration for the largest eigenvalue of the operator `apply`,
/// which must be symmetric positive semidefinite. Returns (lambda, converged).
fn power_iteration(n: usize, mut apply: impl FnMut(&[f64], &mut [f64])) -> (f64, bool) {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i % 13) as f64)).collect();
    normalize(&mut v);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..KAPPA_MAX_ITERS {
        apply(&v, &mut w);
        let new_lambda: f64 = v.iter().zip(&w).map(|(&a, &b)| a * b).sum();
        let wnorm = normalize(&mut w);
        std::mem::swap(&mut v, &mut w);
        if wnorm == 0.0 {
            return (0.0, true);
        }
        if (new_lambda - lambda).abs() <= KAPPA_REL_TOL * new_lambda.abs() {
            return (new_lambda, true);
        }
        lambda = new_lambda;
    }
    (lambda, false)
}

/// Estimates the 2-norm condition number of `a` by power iteration on
/// `AᵀA` (largest singular value) and on `(A Aᵀ)⁻¹` via the factorization
/// (smallest). `converged` reports whether both extremes settled within
/// the iteration cap; the best iterates are returned either way.
pub fn estimate_kappa(a: &SparseMatrix, lu: &BandLu) -> KappaEstimate {
    let n = a.dim();
    let mut tmp = vec![0.0; n];
    let (lam_max, conv_max) = power_iteration(n, |v, out| {
        a.matvec(v, &mut tmp);
        a.matvec_transpose(&tmp, out);
    });
    let (lam_inv, conv_min) = power_iteration(n, |v, out| {
        // (A Aᵀ)⁻¹ v = A⁻ᵀ (A⁻¹ v)
        let z = lu.solve(v).expect("factor dimension");
        let w = lu.solve_transpose(&z).expect("factor dimension");
        out.copy_from_slice(&w);
    });
    let sigma_max = lam_max.max(0.0).sqrt();
    let sigma_min = if lam_inv > 0.0 { 1.0 / lam_inv.sqrt() } else { 0.0 };
    let kappa = if sigma_min > 0.0 { sigma_max / sigma_min } else { f64::INFINITY };
    KappaEstimate { kappa, sigma_max, sigma_min, converged: conv_max && conv_min }
}

pub struct CgReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
}

/// Conjugate gradients on `A x = rhs` when `A` is symmetric (requires
/// positive definiteness); otherwise CG on the normal equations
/// `AᵀA x = Aᵀ rhs`. Converged means `‖A x − rhs‖ ≤ tol · ‖rhs‖`.
pub fn cg_solve(a: &SparseMatrix, rhs: &[f64], tol: f64, max_iters: usize) -> Result<CgReport> {
    check_system(a, rhs)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let n = a.dim();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rhs_norm == 0.0 {
        return Ok(CgReport {
            solution: vec![0.0; n],
            iterations: 0,
            converged: true,
            residual_norm: 0.0,
        });
    }
    let target = tol * rhs_norm;
    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    if a.symmetric_within(1e-12) {
        let mut r = rhs.to_vec();
        let mut p = rhs.to_vec();
        let mut ap = vec![0.0; n];
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        while iterations < max_iters {
            a.matvec(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(&a, &b)| a * b).sum();
            if pap <= 0.0 {
                return Err(Error::InvalidInput(
                    "conjugate gradients requires a positive definite matrix".into(),
                ));
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            if rr_new.sqrt() <= target {
                converged = true;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
    } else {
        // normal equations, matrix-free
        let mut r = rhs.to_vec();
        let mut z = vec![0.0; n];
        a.matvec_transpose(&r, &mut z);
        let mut p = z.clone();
        let mut w = vec![0.0; n];
        let mut zz: f64 = z.iter().map(|v| v * v).sum();
        while iterations < max_iters {
            a.matvec(&p, &mut w);
            let ww: f64 = w.iter().map(|v| v * v).sum();
            if ww == 0.0 {
                return Err(Error::InvalidInput(
                    "normal-equation breakdown: matrix is singular".into(),
                ));
            }
            let alpha = zz / ww;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * w[i];
            }
            iterations += 1;
            let rnorm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= target {
                converged = true;
                break;
            }
            a.matvec_transpose(&r, &mut z);
            let zz_new: f64 = z.iter().map(|v| v * v).sum();
            let beta = zz_new / zz;
            zz = zz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    let res = residual_norm(a, &x, rhs);
    Ok(CgReport { solution: x, iterations, converged, residual_norm: res })
}
