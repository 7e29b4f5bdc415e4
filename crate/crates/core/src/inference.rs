//! p-values by confidence-bound inversion, running-minimum anytime p-values,
//! and α-investing.
//!
//! The one-sided null for comparison `(0, k)` is `μ_0 ≥ μ_k`. Arm `k` clears
//! the control at level `γ` when `LCB_k(n_k, γ) ≥ UCB_0(n_0, γ)`. Radii shrink
//! as `γ` grows, so the clearance set is an interval `[γ*, 1]` and the p-value
//! is its boundary `γ*`: the largest level at which clearance still fails.
//! When clearance fails for every `γ ∈ (0, 1]` the p-value is 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::concentration::{lil_iterated_term, lil_level_term, lil_level_to_delta, BoundKind};
use crate::instance::ArmStats;
use crate::{Error, Result};

/// `(control, arm)` pair under test.
pub type Comparison = (usize, usize);

/// p-value of `H0: μ_0 ≥ μ_k` from one shared σ.
pub fn single_comparison_pvalue(stats0: &ArmStats, statsk: &ArmStats, sigma: f64, kind: BoundKind) -> Result<f64> {
    comparison_pvalue(stats0, sigma, statsk, sigma, kind)
}

/// As [`single_comparison_pvalue`] with a separate σ per arm.
pub fn comparison_pvalue(
    stats0: &ArmStats,
    sigma0: f64,
    statsk: &ArmStats,
    sigmak: f64,
    kind: BoundKind,
) -> Result<f64> {
    let mean0 = stats0.empirical_mean()?;
    let meank = statsk.empirical_mean()?;
    for sigma in [sigma0, sigmak] {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive and finite, got {sigma}")));
        }
    }
    let gap = meank - mean0;
    if !(gap > 0.0) {
        return Ok(1.0);
    }
    let scale0 = sigma0 / (stats0.n as f64).sqrt();
    let scalek = sigmak / (statsk.n as f64).sqrt();
    let p = match kind {
        BoundKind::FixedSample => {
            let width = scale0 + scalek;
            (-gap * gap / (2.0 * width * width)).exp()
        }
        BoundKind::AdaptiveLil => {
            lil_pvalue(gap, scale0, lil_iterated_term(stats0.n), scalek, lil_iterated_term(statsk.n))
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Bisection on the level term `a = ln(12/γ)/1.8`, a monotone
/// reparametrisation of γ. The sum of radii is increasing in `a`.
fn lil_pvalue(gap: f64, scale0: f64, iter0: f64, scalek: f64, iterk: f64) -> f64 {
    let width = |a: f64| scale0 * (iter0 + a).sqrt() + scalek * (iterk + a).sqrt();
    let mut lo = lil_level_term(1.0);
    if width(lo) > gap {
        return 1.0;
    }
    // width(a) > (scale0 + scalek)·√a, so this bracket fails clearance.
    let mut hi = (gap / (scale0 + scalek)).powi(2);
    if !(hi > lo) {
        return 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if width(mid) <= gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lil_level_to_delta(lo)
}

/// Running-minimum anytime p-value over every comparison and every step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueState {
    pub current_min: f64,
    pub per_comparison_min: BTreeMap<Comparison, f64>,
    pub history: Vec<(u64, f64)>,
}

impl Default for PValueState {
    fn default() -> Self {
        Self {
            current_min: 1.0,
            per_comparison_min: BTreeMap::new(),
            history: Vec::new(),
        }
    }
}

impl PValueState {
    pub fn last_step(&self) -> Option<u64> {
        self.history.last().map(|&(s, _)| s)
    }

    pub fn update(&mut self, step: u64, fresh: &[(Comparison, f64)]) -> Result<()> {
        if let Some(last) = self.last_step() {
            if step <= last {
                return Err(Error::Sequencing { step, last });
            }
        }
        for &(cmp, p) in fresh {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param("p", format!("p-value {p} for {cmp:?} outside [0, 1]")));
            }
            let slot = self.per_comparison_min.entry(cmp).or_insert(1.0);
            *slot = slot.min(p);
        }
        self.current_min = self
            .per_comparison_min
            .values()
            .copied()
            .fold(1.0, f64::min);
        self.history.push((step, self.current_min));
        Ok(())
    }

    pub fn comparison_min(&self, cmp: Comparison) -> f64 {
        self.per_comparison_min.get(&cmp).copied().unwrap_or(1.0)
    }
}

pub fn update_anytime_pvalue(state: PValueState, step: u64, pairwise: &[(Comparison, f64)]) -> Result<PValueState> {
    let mut next = state;
    next.update(step, pairwise)?;
    Ok(next)
}

/// α-investing schedule: `φ_t = γ·W(t−1)`, test at `α_t = φ_t/(1+φ_t)`,
/// then `W(t) = W(t−1) − φ_t + ω·R_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaWealth {
    pub wealth: f64,
    pub initial: f64,
    pub spend_fraction: f64,
    pub payout: f64,
    pub t: u64,
    pub rejections: Vec<bool>,
    /// φ_t paid at each settled test.
    pub spends: Vec<f64>,
}

impl AlphaWealth {
    pub fn new(initial: f64, spend_fraction: f64, payout: f64) -> Result<Self> {
        if !(initial >= 0.0 && initial.is_finite()) {
            return Err(Error::param("initial", "wealth must be nonnegative"));
        }
        if !(spend_fraction > 0.0 && spend_fraction < 1.0) {
            return Err(Error::param("spend_fraction", "must lie in (0, 1)"));
        }
        if !(payout > 0.0 && payout.is_finite()) {
            return Err(Error::param("payout", "must be positive"));
        }
        Ok(Self {
            wealth: initial,
            initial,
            spend_fraction,
            payout,
            t: 0,
            rejections: Vec::new(),
            spends: Vec::new(),
        })
    }

    fn investment(&self) -> f64 {
        self.spend_fraction * self.wealth
    }

    pub fn next_level(&self) -> f64 {
        let phi = self.investment();
        if phi <= 0.0 {
            return 0.0;
        }
        phi / (1.0 + phi)
    }

    /// Pays for the current test and credits the payout on a rejection.
    /// A rejection at level zero is not credited.
    pub fn settle(&mut self, rejected: bool) {
        let phi = self.investment();
        let rejected = rejected && phi > 0.0;
        self.wealth = (self.wealth - phi).max(0.0) + if rejected { self.payout } else { 0.0 };
        self.t += 1;
        self.rejections.push(rejected);
        self.spends.push(phi);
    }

    /// Wealth recomputed from the spend and rejection history.
    pub fn replay_wealth(&self) -> f64 {
        self.spends
            .iter()
            .zip(&self.rejections)
            .fold(self.initial, |w, (&phi, &r)| {
                (w - phi).max(0.0) + if r { self.payout } else { 0.0 }
            })
    }
}

pub fn next_level(w: &AlphaWealth) -> f64 {
    w.next_level()
}

pub fn settle_test(w: AlphaWealth, rejected: bool) -> AlphaWealth {
    let mut next = w;
    next.settle(rejected);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub step: u64,
    pub p: f64,
    pub level: f64,
    pub comparison: Comparison,
}

/// False-discovery proportion of one run. `nulls[k]` says whether the
/// comparison of arm `k` against the control is a true null.
pub fn fdr_estimate(nulls: &[bool], discoveries: &[Discovery]) -> f64 {
    let false_hits = discoveries
        .iter()
        .filter(|d| nulls.get(d.comparison.1).copied().unwrap_or(false))
        .count();
    false_hits as f64 / discoveries.len().max(1) as f64
}
