//! Exploration policies over observed statistics.
//!
//! Each policy is split in two layers: a `*_from_intervals` rule that decides
//! from a slice of per-arm [`ConfidenceInterval`]s, and a wrapper that builds
//! those intervals from [`ArmStats`] at the per-step level `delta_t` supplied
//! by the engine. Policies never see ground truth.
//!
//! Ties are always broken toward the lowest arm id.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::concentration::{interval_around, BoundKind, ConfidenceInterval};
use crate::engine::apply_control_edge;
use crate::instance::ArmStats;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "uniform")]
    Uniform,
    #[serde(rename = "ae")]
    ActionElimination,
    #[serde(rename = "ucb")]
    Ucb,
    #[serde(rename = "lucb")]
    Lucb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Uniform,
        PolicyKind::ActionElimination,
        PolicyKind::Ucb,
        PolicyKind::Lucb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Uniform => "uniform",
            PolicyKind::ActionElimination => "ae",
            PolicyKind::Ucb => "ucb",
            PolicyKind::Lucb => "lucb",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "uniform" => Some(PolicyKind::Uniform),
            "ae" | "action_elimination" => Some(PolicyKind::ActionElimination),
            "ucb" => Some(PolicyKind::Ucb),
            "lucb" => Some(PolicyKind::Lucb),
            _ => None,
        }
    }
}

/// What the policy wants next: either arms to sample or a final decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolicyAdvice {
    pub arms_to_sample: Vec<usize>,
    pub stopped: bool,
    pub declared_best: Option<usize>,
}

impl PolicyAdvice {
    pub fn sample(arms: Vec<usize>) -> Self {
        debug_assert!(!arms.is_empty());
        Self {
            arms_to_sample: arms,
            stopped: false,
            declared_best: None,
        }
    }

    pub fn stop(best: usize) -> Self {
        Self {
            arms_to_sample: Vec::new(),
            stopped: true,
            declared_best: Some(best),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyState {
    pub kind: PolicyKind,
    /// Arms still in play. Only action elimination ever shrinks it.
    pub active: BTreeSet<usize>,
    pub bound: BoundKind,
    pub sigmas: Vec<f64>,
    /// Added to the control arm's empirical mean before any bound is formed.
    pub control_edge: f64,
    pub last_choice: Vec<usize>,
    /// AE only: the control arm has been dominated but is kept in `active`
    /// (and sampled) until the final decision.
    pub control_dominated: bool,
}

impl PolicyState {
    pub fn new(kind: PolicyKind, bound: BoundKind, sigmas: Vec<f64>, control_edge: f64) -> Result<Self> {
        if sigmas.len() < 2 {
            return Err(Error::param("arms", format!("policies need at least 2 arms, got {}", sigmas.len())));
        }
        Ok(Self {
            kind,
            active: (0..sigmas.len()).collect(),
            bound,
            sigmas,
            control_edge,
            last_choice: Vec::new(),
            control_dominated: false,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.sigmas.len()
    }

    /// Per-arm intervals at level `delta_t`, with the control edge applied.
    pub fn intervals(&self, stats: &[ArmStats], delta_t: f64) -> Result<Vec<ConfidenceInterval>> {
        if stats.len() != self.sigmas.len() {
            return Err(Error::Internal(format!(
                "policy configured for {} arms, got stats for {}",
                self.sigmas.len(),
                stats.len()
            )));
        }
        stats
            .iter()
            .zip(&self.sigmas)
            .map(|(s, &sigma)| {
                let mut mean = s.empirical_mean()?;
                if s.arm_id == 0 {
                    mean = apply_control_edge(mean, self.control_edge);
                }
                interval_around(mean, s.n, delta_t, sigma, self.bound)
            })
            .collect()
    }

    pub fn advise(&mut self, stats: &[ArmStats], delta_t: f64) -> Result<PolicyAdvice> {
        let advice = match self.kind {
            PolicyKind::Uniform => uniform_next(self, stats),
            PolicyKind::ActionElimination => ae_step(self, stats, delta_t)?,
            PolicyKind::Ucb => ucb_next(self, stats, delta_t)?,
            PolicyKind::Lucb => lucb_next(self, stats, delta_t)?,
        };
        self.last_choice = advice.arms_to_sample.clone();
        Ok(advice)
    }
}

fn argmax_by(n: usize, mut value: impl FnMut(usize) -> f64, skip: Option<usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in (0..n).filter(|&i| Some(i) != skip) {
        let v = value(i);
        match best {
            Some((_, bv)) if !(v > bv) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the largest value and of the largest among the rest.
pub fn identify_best_second(values: &[f64]) -> Result<(usize, usize)> {
    if values.len() < 2 {
        return Err(Error::param("arms", format!("need at least 2 arms, got {}", values.len())));
    }
    let first = argmax_by(values.len(), |i| values[i], None).expect("non-empty");
    let second = argmax_by(values.len(), |i| values[i], Some(first)).expect("at least two");
    Ok((first, second))
}

/// Samples the least-sampled arm. Never stops by itself.
pub fn uniform_next(_state: &PolicyState, stats: &[ArmStats]) -> PolicyAdvice {
    let arm = stats
        .iter()
        .enumerate()
        .min_by_key(|(i, s)| (s.n, *i))
        .map(|(i, _)| i)
        .unwrap_or(0);
    PolicyAdvice::sample(vec![arm])
}

pub fn ae_step(state: &mut PolicyState, stats: &[ArmStats], delta_t: f64) -> Result<PolicyAdvice> {
    for &a in &state.active {
        if stats.get(a).map_or(true, |s| s.n == 0) {
            return Err(Error::NoSamples { arm: a });
        }
    }
    let intervals = state.intervals(stats, delta_t)?;
    ae_from_intervals(state, &intervals)
}

/// One action-elimination round: every active arm whose UCB falls below the
/// LCB of the empirically best active arm is eliminated. The control arm is
/// flagged instead of removed so it keeps being sampled until the decision.
pub fn ae_from_intervals(state: &mut PolicyState, intervals: &[ConfidenceInterval]) -> Result<PolicyAdvice> {
    if state.active.is_empty() {
        return Err(Error::Internal("action elimination active set is empty".into()));
    }
    let reference = *state
        .active
        .iter()
        .fold(None::<&usize>, |best, a| match best {
            Some(b) if !(intervals[*a].center() > intervals[*b].center()) => Some(b),
            _ => Some(a),
        })
        .expect("non-empty");
    let floor = intervals[reference].lcb;
    let dominated: Vec<usize> = state
        .active
        .iter()
        .copied()
        .filter(|&a| a != reference && intervals[a].ucb < floor)
        .collect();
    for a in dominated {
        if a == 0 {
            state.control_dominated = true;
        } else {
            state.active.remove(&a);
        }
    }
    let contenders: Vec<usize> = state
        .active
        .iter()
        .copied()
        .filter(|&a| !(a == 0 && state.control_dominated))
        .collect();
    if contenders.len() == 1 {
        let winner = contenders[0];
        state.active = BTreeSet::from([winner]);
        return Ok(PolicyAdvice::stop(winner));
    }
    Ok(PolicyAdvice::sample(state.active.iter().copied().collect()))
}

pub fn ucb_next(state: &PolicyState, stats: &[ArmStats], delta_t: f64) -> Result<PolicyAdvice> {
    Ok(ucb_from_intervals(&state.intervals(stats, delta_t)?))
}

/// Samples `argmax UCB`; stops once some arm's LCB is `>=` every other UCB.
pub fn ucb_from_intervals(intervals: &[ConfidenceInterval]) -> PolicyAdvice {
    let n = intervals.len();
    let leader = argmax_by(n, |i| intervals[i].lcb, None).expect("non-empty");
    let certified = (0..n)
        .filter(|&i| i != leader)
        .all(|i| intervals[leader].lcb >= intervals[i].ucb);
    if certified {
        return PolicyAdvice::stop(leader);
    }
    PolicyAdvice::sample(vec![argmax_by(n, |i| intervals[i].ucb, None).expect("non-empty")])
}

pub fn lucb_next(state: &PolicyState, stats: &[ArmStats], delta_t: f64) -> Result<PolicyAdvice> {
    lucb_from_intervals(&state.intervals(stats, delta_t)?)
}

/// Finds the top two arms by UCB; stops when the leader's LCB strictly
/// exceeds the runner-up's UCB, otherwise samples both.
pub fn lucb_from_intervals(intervals: &[ConfidenceInterval]) -> Result<PolicyAdvice> {
    let ucbs: Vec<f64> = intervals.iter().map(|c| c.ucb).collect();
    let (best, second) = identify_best_second(&ucbs)?;
    if intervals[best].lcb > intervals[second].ucb {
        Ok(PolicyAdvice::stop(best))
    } else {
        Ok(PolicyAdvice::sample(vec![best, second]))
    }
}

/// The arm whose LCB strictly exceeds every other arm's UCB, if any.
pub fn separation_certificate(intervals: &[ConfidenceInterval]) -> Option<usize> {
    let n = intervals.len();
    let leader = argmax_by(n, |i| intervals[i].lcb, None)?;
    (0..n)
        .filter(|&i| i != leader)
        .all(|i| intervals[leader].lcb > intervals[i].ucb)
        .then_some(leader)
}
