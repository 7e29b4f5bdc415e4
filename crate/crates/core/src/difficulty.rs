//! Instance difficulty terms for best-arm identification.
//!
//! For sorted suboptimality gaps `Δ_[2] ≤ … ≤ Δ_[k+1]` the report holds the
//! total complexity `Σ 1/Δ²`, the top-gap term `1/Δ_[2]²`, the clamped
//! iterated-log factor `ln(max(e, ln(max(e, 1/Δ_[2]))))`, and an entropy
//! surrogate: the Shannon entropy of the weights `Δ_j⁻² / Σ Δ_i⁻²`.
//!
//! The surrogate is a stand-in for the gap-entropy term of the lower bound,
//! not its published definition. None of these values predicts a sample
//! count.

use std::f64::consts::E;

use serde::Serialize;

use crate::instance::ProblemInstance;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifficultyReport {
    pub gaps: Vec<f64>,
    pub total_complexity: f64,
    pub top_term: f64,
    pub entropy_surrogate: f64,
    pub log_factor: f64,
    /// `ln(1/δ)` at the configured δ, when one was given.
    pub ln_inv_delta: Option<f64>,
}

/// Gaps of every non-best arm to the unique best arm, ascending.
pub fn compute_gaps(instance: &ProblemInstance) -> Result<Vec<f64>> {
    let best = instance.best_arm().ok_or_else(|| {
        Error::DegenerateInstance(format!("instance `{}` has a tied best mean", instance.label))
    })?;
    let top = instance.arms()[best].mean;
    let mut gaps: Vec<f64> = instance
        .arms()
        .iter()
        .filter(|a| a.id != best)
        .map(|a| top - a.mean)
        .collect();
    gaps.sort_by(f64::total_cmp);
    Ok(gaps)
}

fn check_gaps(gaps: &[f64]) -> Result<()> {
    if gaps.is_empty() {
        return Err(Error::param("gaps", "at least one gap is required"));
    }
    if let Some(g) = gaps.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::param("gaps", format!("every gap must be positive and finite, got {g}")));
    }
    Ok(())
}

pub fn define_entropy(gaps: &[f64]) -> Result<f64> {
    check_gaps(gaps)?;
    let inv: Vec<f64> = gaps.iter().map(|g| 1.0 / (g * g)).collect();
    let total: f64 = inv.iter().sum();
    let h = inv
        .iter()
        .map(|w| w / total)
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.ln())
        .sum::<f64>();
    Ok(h.max(0.0))
}

pub fn complexity_terms(gaps: &[f64]) -> Result<DifficultyReport> {
    check_gaps(gaps)?;
    let mut sorted = gaps.to_vec();
    sorted.sort_by(f64::total_cmp);
    let smallest = sorted[0];
    let top_term = 1.0 / (smallest * smallest);
    let total_complexity = sorted.iter().map(|g| 1.0 / (g * g)).sum();
    let log_factor = (1.0 / smallest).max(E).ln().max(E).ln();
    Ok(DifficultyReport {
        entropy_surrogate: define_entropy(&sorted)?,
        gaps: sorted,
        total_complexity,
        top_term,
        log_factor,
        ln_inv_delta: None,
    })
}

impl DifficultyReport {
    pub fn for_instance(instance: &ProblemInstance, delta: Option<f64>) -> Result<Self> {
        let mut report = complexity_terms(&compute_gaps(instance)?)?;
        if let Some(d) = delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::param("delta", format!("must lie in (0, 1), got {d}")));
            }
            report.ln_inv_delta = Some((1.0 / d).ln());
        }
        Ok(report)
    }

    /// `key value` lines for terminal output.
    pub fn to_table(&self) -> String {
        let gaps = self.gaps.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "gaps {gaps}\ntotal_complexity {}\ntop_term {}\nentropy_surrogate {}\nlog_factor {}\n",
            self.total_complexity, self.top_term, self.entropy_surrogate, self.log_factor
        );
        if let Some(v) = self.ln_inv_delta {
            out.push_str(&format!("ln_inv_delta {v}\n"));
        }
        out
    }
}
