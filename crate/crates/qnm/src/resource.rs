//! Hardware cost model for the sampled correction step.
//!
//! The solver in this crate only simulates the sampling channel; this
//! module prices what the same step would cost on a device. The central
//! quantity is a normalization surrogate `alpha`: the inverse of the
//! amplitude that a truncated walk-based inversion leaves on the useful
//! branch. From `alpha` follow the per-step success probability, the step
//! size `C_delta_x`, and oracle-query and wall-time scalings.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::jacobian::ScaledSystem;

/// Largest tail length priced by exact summation; beyond this the
/// binomial mass is indistinguishable from its Gaussian limit (agreement
/// is around 1e-6 relative already at the switchover).
const EXACT_LIMIT: u64 = 100_000;

/// Truncation lengths of the inversion series: `c` terms are kept and the
/// walk is cut at depth `j0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TailParams {
    pub c: u64,
    pub j0: u64,
}

/// `c = ceil(kappa^2 ln(kappa / eps))` and
/// `j0 = floor(sqrt(c ln(4 c / eps)))`. Errors when the real-valued tail
/// length falls below 1 (the series would be empty) or overflows.
pub fn tail_params(kappa: f64, eps: f64) -> Result<TailParams> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "condition number must be positive and finite, got {kappa}"
        )));
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "accuracy target must be positive and finite, got {eps}"
        )));
    }
    let c_real = kappa * kappa * (kappa / eps).ln();
    if !(c_real >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "truncation length {c_real} is below 1; the condition number is \
             too small for this accuracy target"
        )));
    }
    if c_real > 1e18 {
        return Err(Error::InvalidInput(format!(
            "truncation length {c_real} overflows the integer tail"
        )));
    }
    let c = c_real.ceil() as u64;
    let j0 = ((c as f64) * (4.0 * c as f64 / eps).ln()).sqrt().floor() as u64;
    Ok(TailParams { c, j0 })
}

/// Exact log-space evaluation of
/// `(4/d) sum_{i=1..c} min(i, j0+1) C(2c, c+i) / 4^c`.
fn alpha_exact(c: u64, j0: u64, d: usize) -> f64 {
    let ln4c = 2.0 * (c as f64) * std::f64::consts::LN_2;
    let top = ln_gamma(2.0 * c as f64 + 1.0);
    let mut sum = 0.0;
    for i in 1..=c {
        let w = i.min(j0 + 1) as f64;
        let ln_term =
            top - ln_gamma((c + i) as f64 + 1.0) - ln_gamma((c - i) as f64 + 1.0) - ln4c;
        sum += w * ln_term.exp();
    }
    4.0 / (d as f64) * sum
}

/// Gaussian limit of the same sum: each tail `P(S > j)` of the centered
/// binomial becomes `0.5 erfc((j + 1/2) / sqrt(c))`.
fn alpha_gaussian(c: u64, j0: u64, d: usize) -> f64 {
    let sc = (c as f64).sqrt();
    let mut sum = 0.0;
    for j in 0..=j0 {
        sum += 0.5 * erfc((j as f64 + 0.5) / sc);
    }
    4.0 / (d as f64) * sum
}

/// Normalization surrogate for given truncation lengths. Uses the exact
/// binomial sum for small `c` and the Gaussian limit above [`EXACT_LIMIT`].
pub fn alpha_from_c(c: u64, j0: u64, d: usize) -> Result<f64> {
    if c < 1 {
        return Err(Error::InvalidInput("truncation length must be at least 1".into()));
    }
    if d < 1 {
        return Err(Error::InvalidInput("sparsity must be at least 1".into()));
    }
    let a = if c <= EXACT_LIMIT { alpha_exact(c, j0, d) } else { alpha_gaussian(c, j0, d) };
    if !a.is_finite() {
        return Err(Error::NonFinite("normalization surrogate"));
    }
    Ok(a)
}

/// Normalization surrogate for a target condition number and accuracy.
pub fn alpha(kappa: f64, eps: f64, d: usize) -> Result<f64> {
    let tail = tail_params(kappa, eps)?;
    alpha_from_c(tail.c, tail.j0, d)
}

/// Probability that the post-selected inversion branch is observed:
/// `p = ||delta_x||^2 / alpha^2`, where `delta_x` solves the normalized
/// system `A y = -b / C_b`.
pub fn success_prob(system: &ScaledSystem, delta_x: &[f64], alpha: f64) -> Result<f64> {
    if delta_x.len() != system.a.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.a.dim(),
            got: delta_x.len(),
        });
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "normalization surrogate must be positive and finite, got {alpha}"
        )));
    }
    let mut sq = 0.0;
    for &v in delta_x {
        if !v.is_finite() {
            return Err(Error::NonFinite("success probability input"));
        }
        sq += v * v;
    }
    Ok(sq / (alpha * alpha))
}

/// Physical step length recovered from observable quantities:
/// `alpha * C_b * sqrt(p) / f_max`. With `p` from [`success_prob`] the
/// surrogate cancels and this equals the Euclidean length of the true
/// Newton step.
pub fn c_delta_x(alpha: f64, c_b: f64, p: f64, f_max: f64) -> Result<f64> {
    for (name, v, strict) in [
        ("normalization surrogate", alpha, true),
        ("residual norm", c_b, false),
        ("success probability", p, false),
        ("derivative scale", f_max, true),
    ] {
        if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be a nonnegative finite number, got {v}")));
        }
    }
    Ok(alpha * c_b * p.sqrt() / f_max)
}

/// Problem-scale inputs for the cost model.
#[derive(Clone, Copy, Debug)]
pub struct CostInputs {
    /// System dimension.
    pub n: usize,
    /// Row sparsity bound.
    pub d: usize,
    /// Condition number of the scaled Jacobian.
    pub kappa: f64,
    /// Solution accuracy target of the linear solve.
    pub eps: f64,
    /// Per-entry sampling accuracy of the readout.
    pub eps_s: f64,
}

impl CostInputs {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {}", self.n)));
        }
        if self.d < 1 {
            return Err(Error::InvalidInput("sparsity must be at least 1".into()));
        }
        if !self.kappa.is_finite() || self.kappa < 1.0 {
            return Err(Error::InvalidInput(format!(
                "condition number must be finite and at least 1, got {}",
                self.kappa
            )));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 || self.eps >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "accuracy target must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if !self.eps_s.is_finite() || self.eps_s <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sampling accuracy must be positive and finite, got {}",
                self.eps_s
            )));
        }
        Ok(())
    }
}

/// Oracle queries per Newton step, by oracle kind.
#[derive(Clone, Copy, Debug)]
pub struct QueryCounts {
    /// Queries to the Jacobian-entry oracle.
    pub matrix: f64,
    /// Queries to the residual-norm oracle.
    pub residual_norm: f64,
    /// Queries to the residual state-preparation oracle.
    pub state_prep: f64,
}

/// Leading-order query counts. All three share the factor
/// `kappa ln(n) / eps_s^2 * ln(d kappa / eps)`; they differ in the
/// sparsity prefactor: `(d + ln n) d`, `d^2`, and `d`.
pub fn query_counts(inputs: &CostInputs) -> Result<QueryCounts> {
    inputs.validate()?;
    let d = inputs.d as f64;
    let lnn = (inputs.n as f64).ln();
    let lnk = (d * inputs.kappa / inputs.eps).ln();
    let common = inputs.kappa * lnn / (inputs.eps_s * inputs.eps_s) * lnk;
    Ok(QueryCounts {
        matrix: (d + lnn) * d * common,
        residual_norm: d * d * common,
        state_prep: d * common,
    })
}

/// Wall-time scalings of one correction step.
#[derive(Clone, Copy, Debug)]
pub struct TimeEstimates {
    /// Sampled-correction route: polylogarithmic in `n`.
    pub quantum: f64,
    /// Direct sparse solve: linear in `n`.
    pub classical: f64,
    /// `classical / quantum`; above 1 the sampled route wins.
    pub crossover: f64,
}

/// `t_q = ln(n)^3 / eps_s^2 * d kappa ln(d kappa / eps) (ln n + d)` against
/// `t_c = n d kappa ln(1 / eps)`, plus their ratio.
pub fn time_estimates(inputs: &CostInputs) -> Result<TimeEstimates> {
    inputs.validate()?;
    let d = inputs.d as f64;
    let lnn = (inputs.n as f64).ln();
    let lnk = (d * inputs.kappa / inputs.eps).ln();
    let quantum = lnn.powi(3) / (inputs.eps_s * inputs.eps_s) * d * inputs.kappa * lnk * (lnn + d);
    let classical = (inputs.n as f64) * d * inputs.kappa * (1.0 / inputs.eps).ln();
    Ok(TimeEstimates { quantum, classical, crossover: classical / quantum })
}
