//! Inexact Newton iteration with a sampled correction direction.
//!
//! Each step solves the scaled linear system `A y = -b / C_b`, recovers the
//! physical step length `C_delta_x = C_b ||y|| / f_max`, and walks along the
//! unit direction `y / ||y||` as reported by the sampling channel. An exact
//! run (`newton_solve`) and a sampled run through the identity channel
//! execute the same arithmetic and therefore produce bit-identical
//! trajectories.
//!
//! After the update only the residual rows whose support intersects the
//! changed entries are recomputed, and the norm tree repairs the affected
//! ancestor sums; per-iteration work stays proportional to the written
//! support, not the dimension.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::jacobian::{assemble, DifferenceScheme};
use crate::linsolve::{estimate_kappa, lu_solve, BandLu};
use crate::norm_tree::{LeafUpdate, NormTree};
use crate::problem::{residual_vector, NonlinearProblem};
use crate::tomography::{sample_linf, TomographyConfig};

/// Iteration controls shared by the exact and sampled solvers.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Convergence cutoff on `||F||_2`.
    pub eps: f64,
    pub max_iter: usize,
    /// Abort (with the `diverged` flag, not an error) once the residual
    /// norm exceeds this multiple of its starting value.
    pub divergence_factor: f64,
    /// Estimate the condition number of the scaled Jacobian each step.
    pub track_kappa: bool,
    pub scheme: DifferenceScheme,
}

impl SolveOptions {
    pub fn new(eps: f64, max_iter: usize) -> Result<Self> {
        let opts = Self { eps, max_iter, ..Self::default() };
        opts.validate()?;
        Ok(opts)
    }

    fn validate(&self) -> Result<()> {
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "convergence cutoff must be positive and finite, got {}",
                self.eps
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("iteration budget must be at least 1".into()));
        }
        if !self.divergence_factor.is_finite() || self.divergence_factor <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "divergence factor must exceed 1, got {}",
                self.divergence_factor
            )));
        }
        Ok(())
    }
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            max_iter: 200,
            divergence_factor: 1e6,
            track_kappa: false,
            scheme: DifferenceScheme::Forward,
        }
    }
}

/// Per-iteration diagnostics. `residual_norm` is `||F||_2` before the step;
/// the remaining fields describe the step that was then taken.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual_norm: f64,
    /// Physical step length `C_b ||y|| / f_max`.
    pub c_delta_x: f64,
    /// Solution entries written.
    pub n_x: usize,
    /// Residual rows recomputed.
    pub n_f: usize,
    /// Condition estimate of the scaled Jacobian, when tracking is on.
    pub kappa: Option<f64>,
    pub wall_seconds: f64,
    /// Residual norm as used for rhs normalization (equals residual_norm).
    pub c_b: f64,
    /// Largest Jacobian magnitude divided out during scaling.
    pub f_max: f64,
    /// `||y||_2` of the scaled-system solution.
    pub scaled_step_norm: f64,
    /// Nonzero entries of the direction that was walked.
    pub support_size: usize,
    /// Shots the sampling channel consumed (0 for exact runs).
    pub shots: u64,
}

/// Outcome of a solve.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub diverged: bool,
    pub final_residual: f64,
    pub solution: Vec<f64>,
}

/// Exact inexact-Newton run: the correction direction is used as computed.
pub fn newton_solve(
    problem: &dyn NonlinearProblem,
    x0: &[f64],
    eps: f64,
    max_iter: usize,
) -> Result<RunTrace> {
    newton_solve_with(problem, x0, &SolveOptions::new(eps, max_iter)?)
}

/// [`newton_solve`] with full control over the iteration.
pub fn newton_solve_with(
    problem: &dyn NonlinearProblem,
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<RunTrace> {
    solve_loop(problem, x0, opts, None::<(&TomographyConfig, &mut ChaCha12Rng)>)
}

/// Sampled run: the correction direction passes through the readout
/// channel described by `cfg` before it is applied.
pub fn qnm_solve(
    problem: &dyn NonlinearProblem,
    x0: &[f64],
    eps: f64,
    cfg: &TomographyConfig,
    max_iter: usize,
    rng: &mut impl Rng,
) -> Result<RunTrace> {
    qnm_solve_with(problem, x0, &SolveOptions::new(eps, max_iter)?, cfg, rng)
}

/// [`qnm_solve`] with full control over the iteration.
pub fn qnm_solve_with(
    problem: &dyn NonlinearProblem,
    x0: &[f64],
    opts: &SolveOptions,
    cfg: &TomographyConfig,
    rng: &mut impl Rng,
) -> Result<RunTrace> {
    solve_loop(problem, x0, opts, Some((cfg, rng)))
}

fn solve_loop<R: Rng>(
    problem: &dyn NonlinearProblem,
    x0: &[f64],
    opts: &SolveOptions,
    mut channel: Option<(&TomographyConfig, &mut R)>,
) -> Result<RunTrace> {
    opts.validate()?;
    let n = problem.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("starting iterate"));
    }
    let mut x = x0.to_vec();
    let f = residual_vector(problem, &x)?;
    let mut tree = NormTree::build(&x, &f)?;
    let limit = opts.divergence_factor * tree.partial_norm_f(0, 0)?;

    let mut records = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut support = Vec::new();
    let mut values = Vec::new();
    let mut adjacency = Vec::new();

    for iter in 0..opts.max_iter {
        let residual_norm = tree.partial_norm_f(0, 0)?;
        if residual_norm <= opts.eps {
            converged = true;
            break;
        }
        if residual_norm > limit {
            diverged = true;
            break;
        }
        let start = Instant::now();

        let sys = assemble(problem, &tree, opts.scheme)?;
        let scaled_rhs: Vec<f64> = sys.b.iter().map(|v| -v / sys.c_b).collect();
        let y = lu_solve(&sys.a, &scaled_rhs)?.delta_x;
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if y_norm == 0.0 {
            return Err(Error::InvalidInput(
                "linear solve returned a zero correction for a nonzero residual".into(),
            ));
        }
        let c_delta_x = sys.c_b * y_norm / sys.f_max;
        let kappa = if opts.track_kappa {
            let lu = BandLu::factor(&sys.a)?;
            Some(estimate_kappa(&sys.a, &lu).kappa)
        } else {
            None
        };

        let unit: Vec<f64> = y.iter().map(|v| v / y_norm).collect();
        let (direction, support_size, shots) = match channel.as_mut() {
            Some((cfg, rng)) => {
                let s = sample_linf(&unit, cfg, *rng)?;
                (s.values, s.support_size, s.shots)
            }
            None => {
                let nnz = unit.iter().filter(|&&v| v != 0.0).count();
                (unit, nnz, 0)
            }
        };

        // write the step on the direction's support and repair exactly the
        // residual rows that can see a changed entry
        let mut updates: Vec<LeafUpdate> = Vec::new();
        let mut rows: Vec<usize> = Vec::new();
        for (k, &v) in direction.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            x[k] += c_delta_x * v;
            if !x[k].is_finite() {
                return Err(Error::NonFinite("solution update"));
            }
            updates.push(LeafUpdate::x(k, x[k]));
            problem.column_adjacency(k, &mut adjacency);
            rows.extend_from_slice(&adjacency);
        }
        let n_x = updates.len();
        rows.sort_unstable();
        rows.dedup();
        let n_f = rows.len();
        for &m in &rows {
            problem.row_support(m, &mut support);
            values.clear();
            values.extend(support.iter().map(|&k| x[k]));
            updates.push(LeafUpdate::f(m, problem.eval_residual(m, &values)?));
        }
        tree.update_entries(&updates)?;

        records.push(IterationRecord {
            iter,
            residual_norm,
            c_delta_x,
            n_x,
            n_f,
            kappa,
            wall_seconds: start.elapsed().as_secs_f64(),
            c_b: sys.c_b,
            f_max: sys.f_max,
            scaled_step_norm: y_norm,
            support_size,
            shots,
        });
    }

    let final_residual = tree.partial_norm_f(0, 0)?;
    if !diverged && final_residual <= opts.eps {
        converged = true;
    }
    Ok(RunTrace { records, converged, diverged, final_residual, solution: x })
}
