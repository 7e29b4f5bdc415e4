//! The sequential experiment loop.
//!
//! After a warm start of `n_init` samples per arm (round-robin), every round
//! runs, in order:
//!
//! 1. fix the α-investing level `α_t`;
//! 2. ask the policy for advice at the per-round confidence level `δ_t`
//!    (`δ·6/(π²t²)`, or `α_t` when levels are coupled) and either stop on its
//!    certificate or draw the advised samples;
//! 3. refresh the control-vs-arm p-values, update the running-minimum anytime
//!    p-value, test the most significant comparison not yet discovered at
//!    level `α_t`, and settle the wealth.
//!
//! Steps count individual samples, so an LUCB round advances the step by two.

use std::f64::consts::PI;

use serde::Serialize;

use crate::config::EngineConfig;
use crate::harness::rng::{sample_reward, RngStream};
use crate::inference::{comparison_pvalue, AlphaWealth, Comparison, Discovery, PValueState};
use crate::instance::{ArmStats, ProblemInstance, SampleRecord};
use crate::policies::{separation_certificate, PolicyAdvice, PolicyKind, PolicyState};
use crate::{Error, Result};

/// Shifts the control arm's mean estimate by the configured edge.
pub fn apply_control_edge(mean_estimate_control: f64, epsilon: f64) -> f64 {
    mean_estimate_control + epsilon
}

/// `δ·6/(π²t²)`; summing over `t ≥ 1` gives back `δ`.
pub fn confidence_schedule(delta: f64, t: u64) -> f64 {
    let t = t.max(1) as f64;
    delta * 6.0 / (PI * PI * t * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    PolicyCertificate,
    Discovery,
    Budget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::PolicyCertificate => "policy_certificate",
            StopReason::Discovery => "discovery",
            StopReason::Budget => "budget",
        }
    }
}

/// State after one round of the loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub step: u64,
    pub arms_sampled: Vec<usize>,
    pub p_anytime: f64,
    pub alpha_t: f64,
    pub wealth: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub declared_best: Option<usize>,
    pub stop_step: u64,
    pub stop_reason: StopReason,
    pub per_arm_counts: Vec<u64>,
    pub p_trajectory: Vec<TrajectoryPoint>,
    pub discoveries: Vec<Discovery>,
    /// Filled in by the harness from ground truth.
    pub correct: Option<bool>,
    pub p_final: f64,
    #[serde(skip)]
    pub log: Vec<SampleRecord>,
}

/// Instrumentation for ordering checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineEvent {
    LevelFixed { round: u64, alpha_t: f64 },
    Sampled { round: u64, step: u64, arm: usize },
    Tested { round: u64, rejected: bool },
    Stopped { round: u64, reason: StopReason },
}

/// Draws `n_init` samples from every arm in round-robin order.
pub fn warm_start(
    config: &EngineConfig,
    instance: &ProblemInstance,
    rng: &mut RngStream,
) -> Result<(Vec<ArmStats>, Vec<SampleRecord>)> {
    config.validate(instance)?;
    let mut stats: Vec<ArmStats> = (0..instance.num_arms()).map(ArmStats::new).collect();
    let mut log = Vec::with_capacity(instance.num_arms() * config.n_init as usize);
    let mut step = 0;
    for _ in 0..config.n_init {
        for arm in instance.arms() {
            step += 1;
            let value = sample_reward(arm, rng);
            stats[arm.id].record_sample(value);
            log.push(SampleRecord {
                step,
                arm_id: arm.id,
                value,
            });
        }
    }
    Ok((stats, log))
}

pub struct Experiment<'a> {
    config: EngineConfig,
    instance: &'a ProblemInstance,
    rng: RngStream,
    sigmas: Vec<f64>,
    stats: Vec<ArmStats>,
    log: Vec<SampleRecord>,
    policy: PolicyState,
    pvalues: PValueState,
    /// Latest single-comparison p-value per arm (index 0 unused).
    fresh: Vec<f64>,
    discovered: Vec<bool>,
    wealth: AlphaWealth,
    discoveries: Vec<Discovery>,
    trajectory: Vec<TrajectoryPoint>,
    events: Option<Vec<EngineEvent>>,
    step: u64,
    round: u64,
    outcome: Option<(StopReason, Option<usize>)>,
}

impl<'a> Experiment<'a> {
    pub fn new(config: &EngineConfig, instance: &'a ProblemInstance, mut rng: RngStream) -> Result<Self> {
        let (stats, log) = warm_start(config, instance, &mut rng)?;
        let sigmas = instance.sigmas();
        let policy = PolicyState::new(config.policy, config.bound, sigmas.clone(), config.epsilon_edge)?;
        let ai = config.alpha_investing;
        let wealth = AlphaWealth::new(ai.initial, ai.spend_fraction, ai.payout)?;
        let step = log.len() as u64;
        let mut exp = Self {
            config: config.clone(),
            instance,
            rng,
            sigmas,
            stats,
            log,
            policy,
            pvalues: PValueState::default(),
            fresh: vec![1.0; instance.num_arms()],
            discovered: vec![false; instance.num_arms()],
            wealth,
            discoveries: Vec::new(),
            trajectory: Vec::new(),
            events: None,
            step,
            round: 0,
            outcome: None,
        };
        for k in 1..exp.instance.num_arms() {
            exp.refresh_pvalue(k)?;
        }
        let fresh: Vec<(Comparison, f64)> = (1..exp.instance.num_arms()).map(|k| ((0, k), exp.fresh[k])).collect();
        exp.pvalues.update(step, &fresh)?;
        Ok(exp)
    }

    /// Records an [`EngineEvent`] for every phase of every round.
    pub fn with_events(mut self) -> Self {
        self.events = Some(Vec::new());
        self
    }

    pub fn events(&self) -> &[EngineEvent] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn wealth(&self) -> &AlphaWealth {
        &self.wealth
    }

    pub fn pvalues(&self) -> &PValueState {
        &self.pvalues
    }

    pub fn outcome(&self) -> Option<(StopReason, Option<usize>)> {
        self.outcome
    }

    fn emit(&mut self, event: EngineEvent) {
        if let Some(events) = self.events.as_mut() {
            events.push(event);
        }
    }

    fn refresh_pvalue(&mut self, arm: usize) -> Result<()> {
        self.fresh[arm] = comparison_pvalue(
            &self.stats[0],
            self.sigmas[0],
            &self.stats[arm],
            self.sigmas[arm],
            self.config.bound,
        )?;
        Ok(())
    }

    fn finish(&mut self, reason: StopReason, declared: Option<usize>) -> StopReason {
        self.outcome = Some((reason, declared));
        let round = self.round;
        self.emit(EngineEvent::Stopped { round, reason });
        reason
    }

    /// Policy advice with the engine's stopping extensions applied.
    fn advice(&mut self, level: f64) -> Result<PolicyAdvice> {
        let advice = self.policy.advise(&self.stats, level)?;
        match self.config.policy {
            PolicyKind::Uniform => {
                let intervals = self.policy.intervals(&self.stats, level)?;
                Ok(match separation_certificate(&intervals) {
                    Some(best) => PolicyAdvice::stop(best),
                    None => advice,
                })
            }
            PolicyKind::Lucb => match advice.declared_best {
                // The leader must also clear the control arm.
                Some(best) if best != 0 => {
                    let intervals = self.policy.intervals(&self.stats, level)?;
                    if intervals[best].lcb > intervals[0].ucb {
                        Ok(advice)
                    } else {
                        Ok(PolicyAdvice::sample(vec![best, 0]))
                    }
                }
                _ => Ok(advice),
            },
            _ => Ok(advice),
        }
    }

    /// Runs one round. Returns the stop reason once the experiment is over.
    pub fn run_step(&mut self) -> Result<Option<StopReason>> {
        if let Some((reason, _)) = self.outcome {
            return Ok(Some(reason));
        }
        if self.step >= self.config.max_steps {
            return Ok(Some(self.finish(StopReason::Budget, None)));
        }
        self.round += 1;
        let round = self.round;

        let alpha_t = self.wealth.next_level();
        self.emit(EngineEvent::LevelFixed { round, alpha_t });
        let level = if self.config.couple_levels && alpha_t > 0.0 {
            alpha_t
        } else {
            confidence_schedule(self.config.delta, self.step + 1)
        };

        let advice = self.advice(level).map_err(|e| self.with_context(e))?;
        if advice.stopped {
            return Ok(Some(self.finish(StopReason::PolicyCertificate, advice.declared_best)));
        }

        let mut sampled = Vec::with_capacity(advice.arms_to_sample.len());
        for &arm in &advice.arms_to_sample {
            if self.step >= self.config.max_steps {
                break;
            }
            let spec = self
                .instance
                .arms()
                .get(arm)
                .ok_or_else(|| Error::Internal(format!("policy advised unknown arm {arm}")))?;
            self.step += 1;
            let value = sample_reward(spec, &mut self.rng);
            self.stats[arm].record_sample(value);
            self.log.push(SampleRecord {
                step: self.step,
                arm_id: arm,
                value,
            });
            sampled.push(arm);
            let step = self.step;
            self.emit(EngineEvent::Sampled { round, step, arm });
        }

        if sampled.contains(&0) {
            for k in 1..self.instance.num_arms() {
                self.refresh_pvalue(k).map_err(|e| self.with_context(e))?;
            }
        } else {
            for &k in &sampled {
                self.refresh_pvalue(k).map_err(|e| self.with_context(e))?;
            }
        }
        let fresh: Vec<(Comparison, f64)> = (1..self.instance.num_arms()).map(|k| ((0, k), self.fresh[k])).collect();
        self.pvalues.update(self.step, &fresh)?;

        // Test the most significant comparison that is not yet a discovery.
        let candidate = (1..self.instance.num_arms())
            .filter(|&k| !self.discovered[k])
            .map(|k| (k, self.pvalues.comparison_min((0, k))))
            .fold(None::<(usize, f64)>, |best, (k, p)| match best {
                Some((_, bp)) if !(p < bp) => best,
                _ => Some((k, p)),
            });
        let mut rejected = false;
        if let Some((k, p)) = candidate {
            rejected = alpha_t > 0.0 && p <= alpha_t;
            if rejected {
                self.discovered[k] = true;
                self.discoveries.push(Discovery {
                    step: self.step,
                    p,
                    level: alpha_t,
                    comparison: (0, k),
                });
            }
            self.wealth.settle(rejected);
            self.emit(EngineEvent::Tested { round, rejected });
        }

        self.trajectory.push(TrajectoryPoint {
            step: self.step,
            arms_sampled: sampled,
            p_anytime: self.pvalues.current_min,
            alpha_t,
            wealth: self.wealth.wealth,
            rejected,
        });

        if rejected && self.config.stop_on_discovery {
            let arm = candidate.map(|(k, _)| k);
            return Ok(Some(self.finish(StopReason::Discovery, arm)));
        }
        Ok(None)
    }

    fn with_context(&self, err: Error) -> Error {
        match err {
            Error::Internal(msg) => Error::Internal(format!("step {}: {msg}", self.step)),
            other => other,
        }
    }

    pub fn run(mut self) -> Result<ExperimentResult> {
        while self.run_step()?.is_none() {}
        Ok(self.into_result())
    }

    /// Packages the current state; an unfinished run is reported as a budget stop.
    pub fn into_result(self) -> ExperimentResult {
        let (stop_reason, declared_best) = self.outcome.unwrap_or((StopReason::Budget, None));
        ExperimentResult {
            declared_best,
            stop_step: self.step,
            stop_reason,
            per_arm_counts: self.stats.iter().map(|s| s.n).collect(),
            p_trajectory: self.trajectory,
            discoveries: self.discoveries,
            correct: None,
            p_final: self.pvalues.current_min,
            log: self.log,
        }
    }
}

/// Runs one experiment on stream 0 of `config.seed`.
pub fn run_experiment(config: &EngineConfig, instance: &ProblemInstance) -> Result<ExperimentResult> {
    run_experiment_on(config, instance, RngStream::new(config.seed, 0))
}

pub fn run_experiment_on(config: &EngineConfig, instance: &ProblemInstance, rng: RngStream) -> Result<ExperimentResult> {
    Experiment::new(config, instance, rng)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concentration::BoundKind;

    fn three_arms() -> ProblemInstance {
        ProblemInstance::gaussian("three", &[0.0, 0.5, 1.0], 1.0).unwrap()
    }

    #[test]
    fn control_edge_examples() {
        assert_eq!(apply_control_edge(0.5, 0.0), 0.5);
        assert!((apply_control_edge(0.5, 0.1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn schedule_sums_to_delta() {
        let total: f64 = (1..200_000).map(|t| confidence_schedule(0.1, t)).sum();
        assert!((total - 0.1).abs() < 1e-5);
    }

    #[test]
    fn warm_start_counts_and_order() {
        let cfg = EngineConfig {
            n_init: 2,
            ..EngineConfig::default()
        };
        let inst = three_arms();
        let (stats, log) = warm_start(&cfg, &inst, &mut RngStream::new(7, 0)).unwrap();
        assert_eq!(stats.iter().map(|s| s.n).collect::<Vec<_>>(), vec![2, 2, 2]);
        assert_eq!(log.len(), 6);
        assert_eq!(log.iter().map(|r| r.arm_id).collect::<Vec<_>>(), vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(log.iter().map(|r| r.step).collect::<Vec<_>>(), (1..=6).collect::<Vec<_>>());
        let (_, again) = warm_start(&cfg, &inst, &mut RngStream::new(7, 0)).unwrap();
        assert_eq!(log, again);
    }

    #[test]
    fn warm_start_rejects_small_budget() {
        let cfg = EngineConfig {
            n_init: 2,
            max_steps: 5,
            ..EngineConfig::default()
        };
        assert!(matches!(
            warm_start(&cfg, &three_arms(), &mut RngStream::new(0, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn lucb_large_edge_declares_control() {
        let inst = three_arms();
        let cfg = EngineConfig {
            epsilon_edge: 100.0,
            max_steps: 10_000,
            ..EngineConfig::default()
        };
        let res = run_experiment(&cfg, &inst).unwrap();
        assert_eq!(res.stop_reason, StopReason::PolicyCertificate);
        assert_eq!(res.declared_best, Some(0));
    }

    #[test]
    fn certificate_round_draws_nothing() {
        let inst = ProblemInstance::gaussian("easy", &[0.0, 50.0], 1.0).unwrap();
        let cfg = EngineConfig {
            n_init: 5,
            max_steps: 1000,
            ..EngineConfig::default()
        };
        let mut exp = Experiment::new(&cfg, &inst, RngStream::new(0, 0)).unwrap();
        let before = exp.step();
        assert_eq!(exp.run_step().unwrap(), Some(StopReason::PolicyCertificate));
        assert_eq!(exp.step(), before);
        assert_eq!(exp.outcome(), Some((StopReason::PolicyCertificate, Some(1))));
    }

    #[test]
    fn bankrupt_tester_never_rejects() {
        let inst = ProblemInstance::gaussian("obvious", &[0.0, 3.0, 3.0], 1.0).unwrap();
        let mut cfg = EngineConfig {
            max_steps: 400,
            ..EngineConfig::default()
        };
        cfg.alpha_investing.initial = 0.0;
        let res = run_experiment(&cfg, &inst).unwrap();
        assert!(res.discoveries.is_empty());
        assert!(res.p_trajectory.iter().all(|p| p.alpha_t == 0.0 && !p.rejected));
    }

    #[test]
    fn accounting_and_replay() {
        for policy in PolicyKind::ALL {
            let cfg = EngineConfig {
                policy,
                n_init: 3,
                max_steps: 3000,
                ..EngineConfig::default()
            };
            let inst = ProblemInstance::gaussian("four", &[0.0, 0.6, 1.2, 0.3], 1.0).unwrap();
            let res = run_experiment(&cfg, &inst).unwrap();
            assert_eq!(res.per_arm_counts.iter().sum::<u64>(), res.stop_step, "{policy:?}");
            assert_eq!(res.log.len() as u64, res.stop_step);
            let replayed = crate::instance::replay(&res.log, inst.num_arms()).unwrap();
            assert_eq!(replayed.iter().map(|s| s.n).collect::<Vec<_>>(), res.per_arm_counts);
            if res.stop_reason == StopReason::PolicyCertificate {
                assert!(res.declared_best.is_some());
            }
            let ps: Vec<f64> = res.p_trajectory.iter().map(|p| p.p_anytime).collect();
            assert!(ps.windows(2).all(|w| w[1] <= w[0]));
            assert!(ps.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn level_is_fixed_before_sampling() {
        let cfg = EngineConfig {
            max_steps: 600,
            bound: BoundKind::FixedSample,
            ..EngineConfig::default()
        };
        let inst = three_arms();
        let mut exp = Experiment::new(&cfg, &inst, RngStream::new(3, 1)).unwrap().with_events();
        while exp.run_step().unwrap().is_none() {}
        let mut current = 0;
        let mut tested = true;
        for ev in exp.events() {
            match *ev {
                EngineEvent::LevelFixed { round, .. } => {
                    assert_eq!(round, current + 1);
                    current = round;
                    tested = false;
                }
                EngineEvent::Sampled { round, .. } => {
                    assert_eq!(round, current);
                    assert!(!tested);
                }
                EngineEvent::Tested { round, .. } => {
                    assert_eq!(round, current);
                    tested = true;
                }
                EngineEvent::Stopped { .. } => {}
            }
        }
        assert!(current > 0);
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = EngineConfig {
            max_steps: 2000,
            seed: 11,
            ..EngineConfig::default()
        };
        let inst = three_arms();
        assert_eq!(run_experiment(&cfg, &inst).unwrap(), run_experiment(&cfg, &inst).unwrap());
    }
}
