//! Problem instances, per-arm sufficient statistics and sample logs.
//!
//! A [`ProblemInstance`] carries ground truth (true means) and is read only by
//! the simulator and by the harness when scoring results. Policies and
//! inference see nothing but [`ArmStats`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{ConfigIssue, Error, Result};

/// Sub-Gaussian scale used for every Bernoulli arm.
pub const BERNOULLI_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Gaussian,
    Bernoulli,
}

/// Ground truth for one arm. Id 0 is the control arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSpec {
    pub id: usize,
    pub mean: f64,
    pub sigma: f64,
    pub distribution: Distribution,
    pub is_control: bool,
}

impl ArmSpec {
    pub fn gaussian(id: usize, mean: f64, sigma: f64) -> Self {
        Self {
            id,
            mean,
            sigma,
            distribution: Distribution::Gaussian,
            is_control: id == 0,
        }
    }

    pub fn bernoulli(id: usize, mean: f64) -> Self {
        Self {
            id,
            mean,
            sigma: BERNOULLI_SIGMA,
            distribution: Distribution::Bernoulli,
            is_control: id == 0,
        }
    }
}

/// An ordered set of `k + 1 >= 2` arms; arm 0 is the control.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInstance {
    pub label: String,
    arms: Vec<ArmSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(default)]
    label: String,
    arms: Vec<RawArm>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    mean: f64,
    sigma: Option<f64>,
    #[serde(default = "default_distribution")]
    distribution: Distribution,
    #[serde(default)]
    is_control: bool,
}

fn default_distribution() -> Distribution {
    Distribution::Gaussian
}

impl ProblemInstance {
    pub fn new(label: impl Into<String>, arms: Vec<ArmSpec>) -> Result<Self> {
        let issues = check_arms(&arms);
        if !issues.is_empty() {
            return Err(Error::Config(issues));
        }
        Ok(Self {
            label: label.into(),
            arms,
        })
    }

    /// Gaussian instance with a shared σ; the first mean is the control.
    pub fn gaussian(label: impl Into<String>, means: &[f64], sigma: f64) -> Result<Self> {
        let arms = means
            .iter()
            .enumerate()
            .map(|(id, &m)| ArmSpec::gaussian(id, m, sigma))
            .collect();
        Self::new(label, arms)
    }

    pub fn from_json_str(text: &str) -> std::result::Result<Self, Vec<ConfigIssue>> {
        let raw: RawInstance =
            serde_json::from_str(text).map_err(|e| vec![ConfigIssue::new("instance", e.to_string())])?;
        let mut issues = Vec::new();
        let mut arms = Vec::with_capacity(raw.arms.len());
        for (id, arm) in raw.arms.into_iter().enumerate() {
            let sigma = match (arm.distribution, arm.sigma) {
                (Distribution::Gaussian, Some(s)) => s,
                (Distribution::Gaussian, None) => {
                    issues.push(ConfigIssue::new(
                        format!("arms[{id}].sigma"),
                        "required for gaussian arms",
                    ));
                    f64::NAN
                }
                (Distribution::Bernoulli, None) => BERNOULLI_SIGMA,
                (Distribution::Bernoulli, Some(s)) if s == BERNOULLI_SIGMA => s,
                (Distribution::Bernoulli, Some(s)) => {
                    issues.push(ConfigIssue::new(
                        format!("arms[{id}].sigma"),
                        format!("bernoulli arms use sigma = 0.5, got {s}"),
                    ));
                    BERNOULLI_SIGMA
                }
            };
            arms.push(ArmSpec {
                id,
                mean: arm.mean,
                sigma,
                distribution: arm.distribution,
                is_control: arm.is_control,
            });
        }
        let extra: Vec<ConfigIssue> = check_arms(&arms)
            .into_iter()
            .filter(|i| !issues.iter().any(|j| j.key == i.key))
            .collect();
        issues.extend(extra);
        if issues.is_empty() {
            Ok(Self {
                label: raw.label,
                arms,
            })
        } else {
            Err(issues)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text).map_err(|issues| {
            Error::Config(
                issues
                    .into_iter()
                    .map(|i| ConfigIssue::new(i.key, format!("{} ({})", i.message, path.display())))
                    .collect(),
            )
        })
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Number of non-control arms.
    pub fn k(&self) -> usize {
        self.arms.len() - 1
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.sigma).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.mean).collect()
    }

    /// The arm with the strictly largest mean, if it is unique.
    pub fn best_arm(&self) -> Option<usize> {
        let (best, top) = self
            .arms
            .iter()
            .map(|a| (a.id, a.mean))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let ties = self.arms.iter().filter(|a| a.mean == top).count();
        (ties == 1).then_some(best)
    }

    /// Whether comparison of arm `k` against the control is a true null
    /// (`mu_0 >= mu_k`).
    pub fn is_null(&self, arm: usize) -> bool {
        self.arms[0].mean >= self.arms[arm].mean
    }
}

fn check_arms(arms: &[ArmSpec]) -> Vec<ConfigIssue> {
    let mut issues = Vec::new();
    if arms.len() < 2 {
        issues.push(ConfigIssue::new(
            "arms",
            format!("need a control and at least one other arm, got {}", arms.len()),
        ));
    }
    let controls: Vec<usize> = arms.iter().filter(|a| a.is_control).map(|a| a.id).collect();
    if controls != [0] {
        issues.push(ConfigIssue::new(
            "arms",
            format!("exactly one control arm is required and it must be first; controls at {controls:?}"),
        ));
    }
    for (pos, arm) in arms.iter().enumerate() {
        if arm.id != pos {
            issues.push(ConfigIssue::new(format!("arms[{pos}]"), format!("id {} out of order", arm.id)));
        }
        if !arm.mean.is_finite() {
            issues.push(ConfigIssue::new(format!("arms[{pos}].mean"), "must be finite"));
        }
        if !(arm.sigma > 0.0 && arm.sigma.is_finite()) {
            issues.push(ConfigIssue::new(format!("arms[{pos}].sigma"), "must be positive and finite"));
        }
        if arm.distribution == Distribution::Bernoulli {
            if !(0.0..=1.0).contains(&arm.mean) {
                issues.push(ConfigIssue::new(format!("arms[{pos}].mean"), "bernoulli mean must lie in [0, 1]"));
            }
            if arm.sigma != BERNOULLI_SIGMA {
                issues.push(ConfigIssue::new(format!("arms[{pos}].sigma"), "bernoulli arms use sigma = 0.5"));
            }
        }
    }
    issues
}

/// Per-arm sufficient statistics: sample count and running sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub arm_id: usize,
    pub n: u64,
    pub sum: f64,
}

impl ArmStats {
    pub fn new(arm_id: usize) -> Self {
        Self {
            arm_id,
            n: 0,
            sum: 0.0,
        }
    }

    pub fn with(arm_id: usize, n: u64, sum: f64) -> Self {
        Self { arm_id, n, sum }
    }

    pub fn record_sample(&mut self, value: f64) {
        self.n += 1;
        self.sum += value;
    }

    pub fn empirical_mean(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::NoSamples { arm: self.arm_id });
        }
        Ok(self.sum / self.n as f64)
    }
}

/// Functional form of [`ArmStats::record_sample`].
pub fn record_sample(stats: ArmStats, value: f64) -> ArmStats {
    let mut next = stats;
    next.record_sample(value);
    next
}

pub fn empirical_mean(stats: &ArmStats) -> Result<f64> {
    stats.empirical_mean()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub step: u64,
    pub arm_id: usize,
    pub value: f64,
}

/// Replays a sample log into fresh per-arm statistics.
pub fn replay(log: &[SampleRecord], num_arms: usize) -> Result<Vec<ArmStats>> {
    let mut stats: Vec<ArmStats> = (0..num_arms).map(ArmStats::new).collect();
    let mut last = 0;
    for rec in log {
        if rec.step <= last {
            return Err(Error::Sequencing {
                step: rec.step,
                last,
            });
        }
        last = rec.step;
        let slot = stats
            .get_mut(rec.arm_id)
            .ok_or_else(|| Error::Internal(format!("log references unknown arm {}", rec.arm_id)))?;
        slot.record_sample(rec.value);
    }
    Ok(stats)
}
