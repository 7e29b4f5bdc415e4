//! Tail bounds and confidence radii for σ-sub-Gaussian sample means.
//!
//! Two radii are provided:
//!
//! - [`fixed_radius`]: the Hoeffding radius `σ·√(2·ln(1/δ)/n)`, valid for a
//!   sample size fixed in advance. It inverts [`hoeffding_tail`] at tail mass
//!   `δ` on one side, so a two-sided interval built from it misses the mean
//!   with probability at most `2δ`.
//! - [`adaptive_radius`]: the finite-sample iterated-logarithm radius for a
//!   random walk stopped at a random time,
//!
//!   ```text
//!   a      = ln(12/δ) / 1.8
//!   radius = (σ/n) · √(0.6·n·ln(log_1.1(n) + 1) + a·n)
//!   ```
//!
//!   obtained by solving `12·exp(−1.8a) = δ`. The bound is stated for
//!   unit-scale increments and is rescaled linearly by σ. The iterated-log
//!   term is evaluated at `max(n, 2)`.
//!
//! Every query names its [`BoundKind`]; there is no default.

use serde::{Deserialize, Serialize};

use crate::instance::ArmStats;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    FixedSample,
    AdaptiveLil,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::FixedSample => "fixed_sample",
            BoundKind::AdaptiveLil => "adaptive_lil",
        }
    }

    /// Parses the config name; `fixed` and `adaptive` are accepted shorthands.
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "fixed_sample" | "fixed" => Some(BoundKind::FixedSample),
            "adaptive_lil" | "adaptive" | "lil" => Some(BoundKind::AdaptiveLil),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lcb: f64,
    pub ucb: f64,
    pub n: u64,
    pub delta: f64,
    pub kind: BoundKind,
}

impl ConfidenceInterval {
    pub fn center(&self) -> f64 {
        0.5 * (self.lcb + self.ucb)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.ucb - self.lcb)
    }
}

const LIL_GROWTH: f64 = 0.6;
const LIL_BASE: f64 = 1.1;
const LIL_RATE: f64 = 1.8;
const LIL_MULTIPLIER: f64 = 12.0;

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be positive and finite, got {sigma}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `exp(−n·ε²/(2σ²))`: upper bound on `P(mean − μ ≥ ε)` for n i.i.d. draws.
pub fn hoeffding_tail(n: u64, eps: f64, sigma: f64) -> Result<f64> {
    check_n(n)?;
    check_sigma(sigma)?;
    if !(eps >= 0.0) {
        return Err(Error::param("eps", format!("must be nonnegative, got {eps}")));
    }
    Ok((-(n as f64) * eps * eps / (2.0 * sigma * sigma)).exp())
}

pub fn fixed_radius(n: u64, delta: f64, sigma: f64) -> Result<f64> {
    check_n(n)?;
    check_delta(delta)?;
    check_sigma(sigma)?;
    Ok(sigma * (2.0 * (1.0 / delta).ln() / n as f64).sqrt())
}

/// The `0.6·ln(log_1.1(n) + 1)` part of the random-walk bound (per unit n).
pub(crate) fn lil_iterated_term(n: u64) -> f64 {
    let n = n.max(2) as f64;
    LIL_GROWTH * (n.ln() / LIL_BASE.ln() + 1.0).ln()
}

/// `a = ln(12/δ)/1.8`, the level-dependent part of the random-walk bound.
pub(crate) fn lil_level_term(delta: f64) -> f64 {
    (LIL_MULTIPLIER / delta).ln() / LIL_RATE
}

/// Inverse of [`lil_level_term`].
pub(crate) fn lil_level_to_delta(level_term: f64) -> f64 {
    LIL_MULTIPLIER * (-LIL_RATE * level_term).exp()
}

pub fn adaptive_radius(n: u64, delta: f64, sigma: f64) -> Result<f64> {
    check_n(n)?;
    check_delta(delta)?;
    check_sigma(sigma)?;
    let n_f = n as f64;
    let iterated = lil_iterated_term(n);
    let level = lil_level_term(delta);
    Ok(sigma / n_f * (iterated * n_f + level * n_f).sqrt())
}

pub fn radius(kind: BoundKind, n: u64, delta: f64, sigma: f64) -> Result<f64> {
    match kind {
        BoundKind::FixedSample => fixed_radius(n, delta, sigma),
        BoundKind::AdaptiveLil => adaptive_radius(n, delta, sigma),
    }
}

/// `[mean − r, mean + r]` around an explicit center.
pub fn interval_around(mean: f64, n: u64, delta: f64, sigma: f64, kind: BoundKind) -> Result<ConfidenceInterval> {
    let r = radius(kind, n, delta, sigma)?;
    Ok(ConfidenceInterval {
        lcb: mean - r,
        ucb: mean + r,
        n,
        delta,
        kind,
    })
}

pub fn interval(stats: &ArmStats, delta: f64, sigma: f64, kind: BoundKind) -> Result<ConfidenceInterval> {
    let mean = stats.empirical_mean()?;
    interval_around(mean, stats.n, delta, sigma, kind)
}
