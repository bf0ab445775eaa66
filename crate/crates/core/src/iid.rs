//! Binary-iid atypicality: typical and atypical code lengths, the exact and
//! approximate criteria, the GLRT statistic, and the evaluable probability
//! bounds for intrinsic atypicality and misses.
//!
//! The separator cost `-log eps` shared by both code lengths cancels in every
//! comparison and is not represented. `tau` is the single header-cost knob.

use crate::codelength::{binary_entropy_unchecked, relative_entropy_unchecked, KtCounts};
use crate::error::{Error, Result};
use std::f64::consts::LN_2;

/// Typical model: iid binary with `P(X = 1) = p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidTypicalModel {
    p: f64,
}

impl IidTypicalModel {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Self { p })
        } else {
            Err(Error::InvalidProbability { value: p, range: "(0, 1)" })
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Cost in bits of a single symbol.
    #[inline]
    pub fn symbol_cost(&self, bit: u8) -> f64 {
        if bit == 0 {
            -(1.0 - self.p).log2()
        } else {
            -self.p.log2()
        }
    }

    /// Typical code length of any sequence with the given counts.
    pub fn codelength_of_counts(&self, counts: KtCounts) -> f64 {
        counts.b as f64 * -self.p.log2() + counts.a as f64 * -(1.0 - self.p).log2()
    }
}

/// Outcome of a fixed-sequence atypicality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtypicalityVerdict {
    /// Typical code length `L_t` in bits.
    pub typical_bits: f64,
    /// Atypical code length `L_a`, including the header cost `tau`.
    pub atypical_bits: f64,
    /// `atypical_bits - typical_bits`.
    pub delta: f64,
    pub is_atypical: bool,
}

fn check_len(l: usize) -> Result<()> {
    if l == 0 {
        Err(Error::LengthTooSmall { min: 1, got: 0 })
    } else {
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

/// `L_t = N(1) log 1/p + N(0) log 1/(1-p)`.
pub fn typical_codelength_iid(x: &[u8], model: &IidTypicalModel) -> f64 {
    model.codelength_of_counts(KtCounts::of(x))
}

/// `L_a = l H(p_hat) + 3/2 log l`, without `tau`.
pub fn atypical_codelength_iid(x: &[u8]) -> Result<f64> {
    check_len(x.len())?;
    Ok(atypical_codelength_of_counts(KtCounts::of(x)))
}

pub(crate) fn atypical_codelength_of_counts(counts: KtCounts) -> f64 {
    let l = counts.total() as f64;
    let p_hat = counts.b as f64 / l;
    l * binary_entropy_unchecked(p_hat) + 1.5 * l.log2()
}

/// Definition-1 test for a single sequence against an iid model: atypical when
/// `L_a + tau < L_t`, equivalently `l D(p_hat||p) > tau + 3/2 log l`.
pub fn iid_atypicality_test(x: &[u8], model: &IidTypicalModel, tau: f64) -> Result<AtypicalityVerdict> {
    check_len(x.len())?;
    check_tau(tau)?;
    Ok(verdict_of_counts(KtCounts::of(x), model, tau))
}

pub(crate) fn verdict_of_counts(counts: KtCounts, model: &IidTypicalModel, tau: f64) -> AtypicalityVerdict {
    let typical_bits = model.codelength_of_counts(counts);
    let atypical_bits = atypical_codelength_of_counts(counts) + tau;
    let delta = atypical_bits - typical_bits;
    AtypicalityVerdict { typical_bits, atypical_bits, delta, is_atypical: delta < 0.0 }
}

/// Deviation bound `Δτ = sqrt(pq ln 4 / l) sqrt(tau + 3/2 log l)` of the
/// large-`l` criterion `|p_hat - p| > Δτ`.
pub fn approx_threshold(model: &IidTypicalModel, l: usize, tau: f64) -> Result<f64> {
    check_len(l)?;
    check_tau(tau)?;
    let p = model.p;
    let lf = l as f64;
    Ok((p * (1.0 - p) * 4f64.ln() / lf).sqrt() * (tau + 1.5 * lf.log2()).sqrt())
}

/// Large-`l` criterion on a sequence: `|p_hat - p| > Δτ`.
pub fn approx_atypical(x: &[u8], model: &IidTypicalModel, tau: f64) -> Result<bool> {
    let delta = approx_threshold(model, x.len(), tau)?;
    let p_hat = x.iter().filter(|&&b| b != 0).count() as f64 / x.len() as f64;
    Ok((p_hat - model.p).abs() > delta)
}

/// GLRT statistic `l D(p_hat || p)` in bits.
pub fn glrt_statistic(x: &[u8], model: &IidTypicalModel) -> Result<f64> {
    check_len(x.len())?;
    let counts = KtCounts::of(x);
    let l = counts.total() as f64;
    Ok(l * relative_entropy_unchecked(counts.b as f64 / l, model.p))
}

/// Deviation `b = sqrt(l p q ln 4) sqrt(tau + 3/2 log l)` of the count
/// `sum x_i` from `l p` at the approximate criterion's boundary.
pub fn count_deviation(l: usize, tau: f64, p: f64) -> f64 {
    let lf = l as f64;
    (lf * p * (1.0 - p) * 4f64.ln()).sqrt() * (tau + 1.5 * lf.log2()).sqrt()
}

/// Upper bound on the probability that an iid(`p`) sequence of length `l` is
/// flagged by the approximate criterion.
///
/// For `p = 1/2` this is `2^(1-tau) l^(-3/2)`. Otherwise the minimized
/// Chernoff bound `2 exp(-l D_nat(p + b/l || p))` on the heavier tail is
/// evaluated exactly (the lighter tail is dominated, so doubling is sound).
pub fn pa_upper_bound(l: usize, tau: f64, p: f64) -> Result<f64> {
    check_len(l)?;
    check_tau(tau)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability { value: p, range: "(0, 1)" });
    }
    let lf = l as f64;
    if p == 0.5 {
        return Ok((2f64.powf(1.0 - tau) * lf.powf(-1.5)).min(1.0));
    }
    // the upper tail of the smaller probability is the heavier tail
    let pp = p.min(1.0 - p);
    let b = count_deviation(l, tau, pp);
    let x = pp + b / lf;
    if b >= lf * (1.0 - pp) {
        return Err(Error::BoundNotEvaluable { l, tau, p, b });
    }
    let exponent = -lf * relative_entropy_unchecked(x, pp) * LN_2;
    Ok((2.0 * exponent.exp()).min(1.0))
}

/// Upper bound on the probability that an iid(`p_a`) sequence is missed by
/// the approximate criterion against typical `p`, clamped to `[0, 1]`.
///
/// The formula assumes `p_a < p`; the other case is handled by relabeling
/// `0 <-> 1`.
pub fn miss_upper_bound(l: usize, tau: f64, p: f64, p_a: f64) -> Result<f64> {
    check_len(l)?;
    check_tau(tau)?;
    for v in [p, p_a] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidProbability { value: v, range: "(0, 1)" });
        }
    }
    if p == p_a {
        return Err(Error::DegenerateAlternative(p));
    }
    let (p, p_a) = if p_a < p { (p, p_a) } else { (1.0 - p, 1.0 - p_a) };
    let (q, q_a) = (1.0 - p, 1.0 - p_a);
    let lf = l as f64;
    let root = (lf * p * q * (2.0 * tau * LN_2 + 3.0 * lf.ln())).sqrt();
    let ln_base = (p - 1.0) * q_a.ln() + (p + 1.0) * q.ln() - p * p_a.ln() - p * p.ln();
    let ln_bound = -tau * LN_2 - 1.5 * lf.ln() + root * (q_a * p / (p_a * q)).ln() - lf * ln_base;
    Ok(ln_bound.exp().clamp(0.0, 1.0))
}
