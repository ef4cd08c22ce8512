//! Simulated amplitude readout of a unit vector.
//!
//! The solver never sees its correction direction exactly: it receives a
//! finite-shot reconstruction instead. Given a unit vector `v`, the channel
//! draws `M` shots from the outcome distribution `p_i = v_i^2` and rebuilds
//! each amplitude as `sqrt(n_i / M)`, carrying the sign over from `v`. The
//! shot count is chosen so that, with high probability, every entry of the
//! reconstruction lies within `eps_s` of the truth.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// How signs are attached to sampled magnitudes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignMode {
    /// Copy the sign of the input entry. Models a readout with perfect
    /// phase information.
    ExactSign,
    /// Copy the sign, then flip it with probability `0.5 exp(-n_i / 2)` on
    /// entries smaller than `eps_s`. Models the residual confusion of a
    /// sign-estimation pass that has few shots to work with.
    TwoPass,
}

/// What the channel does to the sampled amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelMode {
    /// Finite-shot reconstruction, renormalized to unit length.
    Multinomial,
    /// Like `Multinomial`, but entries below `eps_s` are zeroed before
    /// renormalization. Errors if nothing survives.
    Clip,
    /// Returns the input unchanged, bit for bit. No shots are consumed, so
    /// a run through this channel reproduces an exact-correction run
    /// exactly.
    Identity,
}

/// Channel configuration. `eps_s` is the target per-entry accuracy;
/// `shot_constant` is the oversampling constant `C` in the shot-count
/// formula `M = ceil(C ln(N) / eps_s^2)`.
#[derive(Clone, Debug)]
pub struct TomographyConfig {
    pub eps_s: f64,
    pub shot_constant: f64,
    pub sign_mode: SignMode,
    pub channel: ChannelMode,
    pub rng_seed: u64,
}

impl TomographyConfig {
    pub fn new(eps_s: f64) -> Result<Self> {
        if !eps_s.is_finite() || eps_s <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sampling accuracy must be positive and finite, got {eps_s}"
            )));
        }
        Ok(Self {
            eps_s,
            shot_constant: 36.0,
            sign_mode: SignMode::ExactSign,
            channel: ChannelMode::Multinomial,
            rng_seed: 0,
        })
    }

    pub fn with_shot_constant(mut self, c: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "shot constant must be positive and finite, got {c}"
            )));
        }
        self.shot_constant = c;
        Ok(self)
    }

    pub fn with_sign_mode(mut self, mode: SignMode) -> Self {
        self.sign_mode = mode;
        self
    }

    pub fn with_channel(mut self, channel: ChannelMode) -> Self {
        self.channel = channel;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Stream cipher generator seeded from `rng_seed`; the same config
    /// always produces the same shot sequence.
    pub fn make_rng(&self) -> ChaCha12Rng {
        use rand::SeedableRng;
        ChaCha12Rng::seed_from_u64(self.rng_seed)
    }
}

/// Shot budget for reconstructing an `n`-dimensional unit vector to
/// per-entry accuracy `eps_s`: `M = ceil(C ln(n) / eps_s^2)`, at least 1.
pub fn shots_for(n: usize, cfg: &TomographyConfig) -> Result<u64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "shot formula needs dimension >= 2, got {n}"
        )));
    }
    let raw = cfg.shot_constant * (n as f64).ln() / (cfg.eps_s * cfg.eps_s);
    if !raw.is_finite() {
        return Err(Error::NonFinite("shot count"));
    }
    Ok((raw.ceil() as u64).max(1))
}

/// A finite-shot reconstruction of a unit vector.
#[derive(Clone, Debug)]
pub struct SampledVector {
    pub values: Vec<f64>,
    /// Number of nonzero entries in `values`.
    pub support_size: usize,
    /// Shots consumed (0 for the identity channel).
    pub shots: u64,
}

fn check_unit_vector(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidInput("cannot sample an empty vector".into()));
    }
    let mut sq = 0.0;
    for &x in v {
        if !x.is_finite() {
            return Err(Error::NonFinite("sampling input"));
        }
        sq += x * x;
    }
    let norm = sq.sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "sampling input must have unit length, got norm {norm}"
        )));
    }
    Ok(())
}

/// Multinomial draw over the outcome distribution `p_i = v_i^2` by binomial
/// splitting. Exactly `shots` counts are distributed; indices with zero
/// probability never receive any.
fn draw_counts(v: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<u64> {
    let nonzero: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
    let mut counts = vec![0u64; v.len()];
    let mut mass_left: f64 = nonzero.iter().map(|&i| v[i] * v[i]).sum();
    let mut shots_left = shots;
    for (pos, &i) in nonzero.iter().enumerate() {
        if shots_left == 0 {
            break;
        }
        if pos + 1 == nonzero.len() {
            counts[i] = shots_left;
            break;
        }
        let p = v[i] * v[i];
        let cond = (p / mass_left).clamp(0.0, 1.0);
        let draw = Binomial::new(shots_left, cond)
            .expect("conditional probability is clamped to [0, 1]")
            .sample(rng);
        counts[i] = draw;
        shots_left -= draw;
        mass_left -= p;
    }
    counts
}

/// Reconstructs `v` from a finite number of shots. The input must have unit
/// Euclidean length; the output does too (except bit-exact passthrough in
/// identity mode).
pub fn sample_linf(
    v: &[f64],
    cfg: &TomographyConfig,
    rng: &mut impl Rng,
) -> Result<SampledVector> {
    check_unit_vector(v)?;
    if cfg.channel == ChannelMode::Identity {
        let support_size = v.iter().filter(|&&x| x != 0.0).count();
        return Ok(SampledVector { values: v.to_vec(), support_size, shots: 0 });
    }
    let shots = shots_for(v.len(), cfg)?;
    let counts = draw_counts(v, shots, rng);
    let mut values: Vec<f64> = counts
        .iter()
        .zip(v)
        .map(|(&n, &vi)| ((n as f64 / shots as f64).sqrt()).copysign(vi))
        .collect();
    if cfg.sign_mode == SignMode::TwoPass {
        for (i, x) in values.iter_mut().enumerate() {
            if *x != 0.0 && v[i].abs() < cfg.eps_s {
                let flip_prob = 0.5 * (-(counts[i] as f64) / 2.0).exp();
                if rng.gen::<f64>() < flip_prob {
                    *x = -*x;
                }
            }
        }
    }
    if cfg.channel == ChannelMode::Clip {
        for x in values.iter_mut() {
            if x.abs() < cfg.eps_s {
                *x = 0.0;
            }
        }
    }
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput(
            "clip threshold removed every sampled entry".into(),
        ));
    }
    for x in values.iter_mut() {
        *x /= norm;
    }
    let support_size = values.iter().filter(|&&x| x != 0.0).count();
    Ok(SampledVector { values, support_size, shots })
}
