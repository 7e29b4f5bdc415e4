//! Seeded Monte Carlo replication and aggregation.
//!
//! Replication `i` of a batch runs on [`RngStream`] `(config.seed, i)`.
//! Replications run in parallel and are folded in stream order, so a batch
//! is identical to its sequential execution.

pub mod output;
pub mod rng;

use rayon::prelude::*;
use serde::Serialize;

use crate::concentration::BoundKind;
use crate::config::EngineConfig;
use crate::engine::{run_experiment_on, ExperimentResult, StopReason, TrajectoryPoint};
use crate::inference::{fdr_estimate, Discovery};
use crate::instance::ProblemInstance;
use crate::policies::PolicyKind;
use crate::{Error, Result};

pub use output::{emit_results, OutputFormat};
pub use rng::{sample_reward, RngStream};

/// Per-replication summary, one row of `replications.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRow {
    pub replication: u64,
    pub declared_best: Option<usize>,
    pub stop_step: u64,
    pub stop_reason: StopReason,
    pub correct: Option<bool>,
    pub p_final: f64,
    pub n_discoveries: usize,
    pub false_discovery_proportion: f64,
    pub per_arm_counts: Vec<u64>,
}

/// Aggregate statistics for one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRow {
    pub policy: PolicyKind,
    pub replications: u64,
    /// Fraction of all replications that stopped with a wrong arm declared.
    pub misidentification_rate: f64,
    /// Fraction of replications that stopped before the budget.
    pub completion_rate: f64,
    /// Over completed replications; `None` when none completed.
    pub mean_stop_step: Option<f64>,
    pub median_stop_step: Option<f64>,
    pub empirical_fdr: f64,
    /// Fraction of replications whose anytime p-value reached `alpha`.
    pub anytime_crossing_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub label: String,
    pub bound: BoundKind,
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
    pub replications: u64,
    pub misidentification_rate: f64,
    pub completion_rate: f64,
    pub mean_stop_step: Option<f64>,
    pub median_stop_step: Option<f64>,
    pub empirical_fdr: f64,
    pub anytime_crossing_rate: f64,
    pub per_policy: Vec<PolicyRow>,
}

/// A batch with its per-replication rows and the retained trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub report: BatchReport,
    pub rows: Vec<ReplicationRow>,
    pub trajectories: Vec<(u64, Vec<TrajectoryPoint>)>,
}

/// Comparison null indicators indexed by arm id (`nulls[0]` is unused).
pub fn null_indicators(instance: &ProblemInstance) -> Vec<bool> {
    (0..instance.num_arms()).map(|k| k > 0 && instance.is_null(k)).collect()
}

/// Fills `correct` from ground truth: whether the declared arm is the unique best.
pub fn score(result: &mut ExperimentResult, instance: &ProblemInstance) {
    result.correct = result.declared_best.map(|d| Some(d) == instance.best_arm());
}

/// Mean of the per-replication false-discovery proportions.
pub fn aggregate_fdr(per_replication: &[Vec<Discovery>], nulls: &[bool]) -> f64 {
    if per_replication.is_empty() {
        return 0.0;
    }
    per_replication.iter().map(|d| fdr_estimate(nulls, d)).sum::<f64>() / per_replication.len() as f64
}

fn median(sorted: &[u64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some(0.5 * (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64)),
    }
}

fn summarize(policy: PolicyKind, alpha: f64, rows: &[ReplicationRow]) -> PolicyRow {
    let m = rows.len();
    let frac = |count: usize| if m == 0 { 0.0 } else { count as f64 / m as f64 };
    let mut completed: Vec<u64> = rows
        .iter()
        .filter(|r| r.stop_reason != StopReason::Budget)
        .map(|r| r.stop_step)
        .collect();
    completed.sort_unstable();
    let mean = (!completed.is_empty()).then(|| completed.iter().sum::<u64>() as f64 / completed.len() as f64);
    let fdr = if m == 0 {
        0.0
    } else {
        rows.iter().map(|r| r.false_discovery_proportion).sum::<f64>() / m as f64
    };
    PolicyRow {
        policy,
        replications: m as u64,
        misidentification_rate: frac(rows.iter().filter(|r| r.correct == Some(false)).count()),
        completion_rate: frac(completed.len()),
        mean_stop_step: mean,
        median_stop_step: median(&completed),
        empirical_fdr: fdr,
        anytime_crossing_rate: frac(rows.iter().filter(|r| r.p_final <= alpha).count()),
    }
}

fn row_from(replication: u64, result: &ExperimentResult, nulls: &[bool]) -> ReplicationRow {
    ReplicationRow {
        replication,
        declared_best: result.declared_best,
        stop_step: result.stop_step,
        stop_reason: result.stop_reason,
        correct: result.correct,
        p_final: result.p_final,
        n_discoveries: result.discoveries.len(),
        false_discovery_proportion: fdr_estimate(nulls, &result.discoveries),
        per_arm_counts: result.per_arm_counts.clone(),
    }
}

/// Runs `m` replications on streams `0..m`, keeping the trajectories of the
/// first `keep_trajectories`.
pub fn run_batch(
    config: &EngineConfig,
    instance: &ProblemInstance,
    m: u64,
    keep_trajectories: u64,
    parallel: bool,
) -> Result<Batch> {
    config.validate(instance)?;
    let nulls = null_indicators(instance);
    let one = |rep: u64| -> Result<(ReplicationRow, Option<Vec<TrajectoryPoint>>)> {
        let mut result = run_experiment_on(config, instance, RngStream::new(config.seed, rep)).map_err(|e| {
            Error::Replication {
                stream_id: rep,
                source: Box::new(e),
            }
        })?;
        score(&mut result, instance);
        let row = row_from(rep, &result, &nulls);
        let traj = (rep < keep_trajectories).then(|| std::mem::take(&mut result.p_trajectory));
        Ok((row, traj))
    };
    let outcomes: Vec<_> = if parallel {
        (0..m).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..m).map(one).collect::<Result<_>>()?
    };

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut trajectories = Vec::new();
    for (row, traj) in outcomes {
        if let Some(t) = traj {
            trajectories.push((row.replication, t));
        }
        rows.push(row);
    }
    let summary = summarize(config.policy, config.alpha, &rows);
    let report = BatchReport {
        label: instance.label.clone(),
        bound: config.bound,
        alpha: config.alpha,
        delta: config.delta,
        seed: config.seed,
        replications: m,
        misidentification_rate: summary.misidentification_rate,
        completion_rate: summary.completion_rate,
        mean_stop_step: summary.mean_stop_step,
        median_stop_step: summary.median_stop_step,
        empirical_fdr: summary.empirical_fdr,
        anytime_crossing_rate: summary.anytime_crossing_rate,
        per_policy: vec![summary],
    };
    Ok(Batch {
        report,
        rows,
        trajectories,
    })
}

pub fn run_replications(config: &EngineConfig, instance: &ProblemInstance, m: u64) -> Result<BatchReport> {
    if m == 0 {
        return Err(Error::param("replications", "must be at least 1"));
    }
    Ok(run_batch(config, instance, m, 0, true)?.report)
}

/// One row per policy, every policy run on the same seed set.
pub fn compare_policies(
    template: &EngineConfig,
    instance: &ProblemInstance,
    policies: &[PolicyKind],
    m: u64,
) -> Result<Vec<PolicyRow>> {
    policies
        .iter()
        .map(|&policy| {
            let config = EngineConfig {
                policy,
                ..template.clone()
            };
            let report = run_replications(&config, instance, m)?;
            Ok(report.per_policy.into_iter().next().expect("one policy row"))
        })
        .collect()
}
