//! Experiment configuration files and validation.
//!
//! An experiment file is a JSON object. Every key is optional; omitted keys
//! take the defaults of [`EngineConfig::default`]. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "instance": "instances/five_arms.json",
//!   "policy": "lucb",
//!   "bound": "adaptive_lil",
//!   "alpha": 0.05,
//!   "delta": 0.1,
//!   "n_init": 10,
//!   "epsilon_edge": 0.0,
//!   "max_steps": 100000,
//!   "alpha_investing": { "initial": 0.025, "spend_fraction": 0.1, "payout": 0.05 },
//!   "seed": 0,
//!   "stop_on_discovery": false,
//!   "couple_levels": false,
//!   "replications": 100,
//!   "trajectories": 1,
//!   "policies": ["uniform", "lucb"]
//! }
//! ```
//!
//! `instance` is resolved relative to the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::concentration::BoundKind;
use crate::instance::ProblemInstance;
use crate::policies::PolicyKind;
use crate::{ConfigIssue, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaInvestingConfig {
    pub initial: f64,
    pub spend_fraction: f64,
    pub payout: f64,
}

impl AlphaInvestingConfig {
    /// `W(0) = α/2`, `γ = 0.1`, `ω = α`.
    pub fn defaults_for(alpha: f64) -> Self {
        Self {
            initial: alpha / 2.0,
            spend_fraction: 0.1,
            payout: alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    pub policy: PolicyKind,
    pub bound: BoundKind,
    pub alpha: f64,
    pub delta: f64,
    pub n_init: u64,
    pub epsilon_edge: f64,
    pub max_steps: u64,
    pub alpha_investing: AlphaInvestingConfig,
    pub seed: u64,
    pub stop_on_discovery: bool,
    /// Use the α-investing level `α_t` (when positive) instead of the `δ_t`
    /// schedule for policy confidence bounds.
    pub couple_levels: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Lucb,
            bound: BoundKind::AdaptiveLil,
            alpha: 0.05,
            delta: 0.1,
            n_init: 10,
            epsilon_edge: 0.0,
            max_steps: 100_000,
            alpha_investing: AlphaInvestingConfig::defaults_for(0.05),
            seed: 0,
            stop_on_discovery: false,
            couple_levels: false,
        }
    }
}

impl EngineConfig {
    /// Issues independent of the instance.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.alpha) {
            issues.push(ConfigIssue::new("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !open_unit(self.delta) {
            issues.push(ConfigIssue::new("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if self.n_init < 2 {
            issues.push(ConfigIssue::new("n_init", format!("must be at least 2, got {}", self.n_init)));
        }
        if !(self.epsilon_edge >= 0.0 && self.epsilon_edge.is_finite()) {
            issues.push(ConfigIssue::new(
                "epsilon_edge",
                format!("must be nonnegative and finite, got {}", self.epsilon_edge),
            ));
        }
        if self.max_steps == 0 {
            issues.push(ConfigIssue::new("max_steps", "must be positive"));
        }
        let ai = &self.alpha_investing;
        if !(ai.initial >= 0.0 && ai.initial.is_finite()) {
            issues.push(ConfigIssue::new(
                "alpha_investing.initial",
                format!("must be nonnegative, got {}", ai.initial),
            ));
        }
        if !open_unit(ai.spend_fraction) {
            issues.push(ConfigIssue::new(
                "alpha_investing.spend_fraction",
                format!("must lie in (0, 1), got {}", ai.spend_fraction),
            ));
        }
        if !(ai.payout > 0.0 && ai.payout <= self.alpha) {
            issues.push(ConfigIssue::new(
                "alpha_investing.payout",
                format!("must lie in (0, alpha = {}], got {}", self.alpha, ai.payout),
            ));
        }
        issues
    }

    /// Issues that involve the instance size.
    pub fn issues_for(&self, instance: &ProblemInstance) -> Vec<ConfigIssue> {
        let mut issues = self.issues();
        let warm = instance.num_arms() as u64 * self.n_init;
        if self.max_steps <= warm {
            issues.push(ConfigIssue::new(
                "max_steps",
                format!(
                    "must exceed (k+1)*n_init = {} * {} = {warm}, got {}",
                    instance.num_arms(),
                    self.n_init,
                    self.max_steps
                ),
            ));
        }
        issues
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        let issues = self.issues_for(instance);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlphaInvesting {
    initial: Option<f64>,
    spend_fraction: Option<f64>,
    payout: Option<f64>,
}

/// The on-disk experiment file, before validation.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    instance: Option<String>,
    policy: Option<String>,
    bound: Option<String>,
    alpha: Option<f64>,
    delta: Option<f64>,
    n_init: Option<u64>,
    epsilon_edge: Option<f64>,
    max_steps: Option<u64>,
    alpha_investing: Option<RawAlphaInvesting>,
    seed: Option<u64>,
    stop_on_discovery: Option<bool>,
    couple_levels: Option<bool>,
    replications: Option<u64>,
    trajectories: Option<u64>,
    policies: Option<Vec<String>>,
}

impl RawConfig {
    pub fn from_json_str(text: &str) -> std::result::Result<Self, ConfigIssue> {
        serde_json::from_str(text).map_err(|e| ConfigIssue::new("config", e.to_string()))
    }
}

/// A validated experiment: engine settings plus harness settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub engine: EngineConfig,
    pub instance_path: Option<PathBuf>,
    pub replications: u64,
    pub trajectories: u64,
    pub policies: Vec<PolicyKind>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            instance_path: None,
            replications: 100,
            trajectories: 1,
            policies: PolicyKind::ALL.to_vec(),
        }
    }
}

/// Checks every field of a raw config and reports all problems at once.
pub fn validate_config(raw: RawConfig) -> std::result::Result<ExperimentConfig, Vec<ConfigIssue>> {
    let mut issues = Vec::new();
    let mut out = ExperimentConfig::default();
    let engine = &mut out.engine;

    if let Some(name) = raw.policy {
        match PolicyKind::parse(&name) {
            Some(p) => engine.policy = p,
            None => issues.push(ConfigIssue::new("policy", format!("unknown policy `{name}` (uniform|ae|ucb|lucb)"))),
        }
    }
    if let Some(name) = raw.bound {
        match BoundKind::parse(&name) {
            Some(b) => engine.bound = b,
            None => issues.push(ConfigIssue::new(
                "bound",
                format!("unknown bound `{name}` (fixed_sample|adaptive_lil)"),
            )),
        }
    }
    if let Some(a) = raw.alpha {
        engine.alpha = a;
    }
    engine.alpha_investing = AlphaInvestingConfig::defaults_for(engine.alpha);
    if let Some(ai) = raw.alpha_investing {
        let slot = &mut engine.alpha_investing;
        slot.initial = ai.initial.unwrap_or(slot.initial);
        slot.spend_fraction = ai.spend_fraction.unwrap_or(slot.spend_fraction);
        slot.payout = ai.payout.unwrap_or(slot.payout);
    }
    engine.delta = raw.delta.unwrap_or(engine.delta);
    engine.n_init = raw.n_init.unwrap_or(engine.n_init);
    engine.epsilon_edge = raw.epsilon_edge.unwrap_or(engine.epsilon_edge);
    engine.max_steps = raw.max_steps.unwrap_or(engine.max_steps);
    engine.seed = raw.seed.unwrap_or(engine.seed);
    engine.stop_on_discovery = raw.stop_on_discovery.unwrap_or(engine.stop_on_discovery);
    engine.couple_levels = raw.couple_levels.unwrap_or(engine.couple_levels);
    issues.extend(engine.issues());

    out.instance_path = raw.instance.map(PathBuf::from);
    if let Some(m) = raw.replications {
        out.replications = m;
    }
    if out.replications == 0 {
        issues.push(ConfigIssue::new("replications", "must be at least 1"));
    }
    out.trajectories = raw.trajectories.unwrap_or(out.trajectories);
    if let Some(names) = raw.policies {
        out.policies.clear();
        for (i, name) in names.iter().enumerate() {
            match PolicyKind::parse(name) {
                Some(p) => out.policies.push(p),
                None => issues.push(ConfigIssue::new(format!("policies[{i}]"), format!("unknown policy `{name}`"))),
            }
        }
        if names.is_empty() {
            issues.push(ConfigIssue::new("policies", "must not be empty"));
        }
    }

    if issues.is_empty() {
        Ok(out)
    } else {
        Err(issues)
    }
}

/// Reads and validates an experiment file. A relative `instance` path is
/// resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw = RawConfig::from_json_str(&text).map_err(|i| Error::Config(vec![i]))?;
    let mut cfg = validate_config(raw).map_err(Error::Config)?;
    if let Some(inst) = cfg.instance_path.take() {
        let resolved = if inst.is_relative() {
            path.parent().unwrap_or_else(|| Path::new(".")).join(inst)
        } else {
            inst
        };
        cfg.instance_path = Some(resolved);
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        RawConfig::from_json_str(text).unwrap()
    }

    #[test]
    fn alpha_out_of_range_names_key() {
        let issues = validate_config(raw(r#"{"alpha": 1.5}"#)).unwrap_err();
        assert!(issues.iter().any(|i| i.key == "alpha"), "{issues:?}");
    }

    #[test]
    fn n_init_one_names_key() {
        let issues = validate_config(raw(r#"{"n_init": 1}"#)).unwrap_err();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].key, "n_init");
    }

    #[test]
    fn all_issues_reported_together() {
        let issues = validate_config(raw(
            r#"{"alpha": 0, "delta": 2, "n_init": 0, "policy": "greedy", "alpha_investing": {"spend_fraction": 1.0}}"#,
        ))
        .unwrap_err();
        let keys: Vec<&str> = issues.iter().map(|i| i.key.as_str()).collect();
        for key in ["policy", "alpha", "delta", "n_init", "alpha_investing.spend_fraction"] {
            assert!(keys.contains(&key), "missing {key} in {keys:?}");
        }
    }

    #[test]
    fn valid_file_matches_fixture() {
        let cfg = validate_config(raw(
            r#"{"instance": "inst.json", "policy": "ae", "bound": "fixed_sample", "alpha": 0.1,
                "delta": 0.05, "n_init": 4, "epsilon_edge": 0.25, "max_steps": 5000,
                "alpha_investing": {"spend_fraction": 0.2}, "seed": 42,
                "stop_on_discovery": true, "couple_levels": true, "replications": 7,
                "trajectories": 2, "policies": ["uniform", "lucb"]}"#,
        ))
        .unwrap();
        let expected = ExperimentConfig {
            engine: EngineConfig {
                policy: PolicyKind::ActionElimination,
                bound: BoundKind::FixedSample,
                alpha: 0.1,
                delta: 0.05,
                n_init: 4,
                epsilon_edge: 0.25,
                max_steps: 5000,
                alpha_investing: AlphaInvestingConfig {
                    initial: 0.05,
                    spend_fraction: 0.2,
                    payout: 0.1,
                },
                seed: 42,
                stop_on_discovery: true,
                couple_levels: true,
            },
            instance_path: Some(PathBuf::from("inst.json")),
            replications: 7,
            trajectories: 2,
            policies: vec![PolicyKind::Uniform, PolicyKind::Lucb],
        };
        assert_eq!(cfg, expected);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RawConfig::from_json_str(r#"{"alpah": 0.05}"#).is_err());
        assert!(RawConfig::from_json_str(r#"{"alpha_investing": {"rate": 0.1}}"#).is_err());
    }

    #[test]
    fn payout_capped_by_alpha() {
        let issues = validate_config(raw(r#"{"alpha": 0.05, "alpha_investing": {"payout": 0.2}}"#)).unwrap_err();
        assert_eq!(issues[0].key, "alpha_investing.payout");
    }

    #[test]
    fn budget_must_exceed_warm_start() {
        let inst = ProblemInstance::gaussian("three", &[0.0, 1.0, 2.0], 1.0).unwrap();
        let cfg = EngineConfig {
            n_init: 2,
            max_steps: 5,
            ..EngineConfig::default()
        };
        let err = cfg.validate(&inst).unwrap_err();
        match err {
            Error::Config(issues) => assert_eq!(issues[0].key, "max_steps"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
