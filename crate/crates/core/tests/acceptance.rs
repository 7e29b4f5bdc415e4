//! Acceptance gates. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p adaptest --test acceptance -- --nocapture` to see them.
//!
//! Monte Carlo gates use a slack of three standard errors:
//! `rate <= p + 3·sqrt(p(1−p)/M)`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use adaptest::concentration::{adaptive_radius, fixed_radius, hoeffding_tail, interval, BoundKind};
use adaptest::config::{AlphaInvestingConfig, EngineConfig};
use adaptest::difficulty::{compute_gaps, complexity_terms};
use adaptest::harness::{compare_policies, run_batch, RngStream};
use adaptest::inference::single_comparison_pvalue;
use adaptest::instance::{ArmStats, ProblemInstance};
use adaptest::policies::PolicyKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn slack(p: f64, m: u64) -> f64 {
    p + 3.0 * (p * (1.0 - p) / m as f64).sqrt()
}

#[test]
fn c1_delta_correctness() {
    let start = Instant::now();
    let instance = ProblemInstance::gaussian("five arms", &[1.0, 0.5, 0.4, 0.3, 0.0], 1.0).unwrap();
    let config = EngineConfig {
        policy: PolicyKind::Lucb,
        bound: BoundKind::AdaptiveLil,
        delta: 0.1,
        max_steps: 1_000_000,
        seed: 20_220_221,
        ..EngineConfig::default()
    };
    let m = 1000;
    let batch = run_batch(&config, &instance, m, 0, true).unwrap();
    let limit = slack(0.1, m);
    let r = &batch.report;
    report(
        1,
        "delta-correctness",
        r.misidentification_rate <= limit && r.completion_rate == 1.0,
        format!(
            "misidentification {} <= {limit:.5} (completed {}, median stop {:?}, {:.1?})",
            r.misidentification_rate,
            r.completion_rate,
            r.median_stop_step,
            start.elapsed()
        ),
    );
}

#[test]
fn c2_anytime_validity() {
    let start = Instant::now();
    let instance = ProblemInstance::gaussian("global null", &[0.0, 0.0, 0.0], 1.0).unwrap();
    let config = EngineConfig {
        policy: PolicyKind::Lucb,
        bound: BoundKind::AdaptiveLil,
        alpha: 0.05,
        max_steps: 5000,
        seed: 8,
        ..EngineConfig::default()
    };
    let m = 5000;
    let batch = run_batch(&config, &instance, m, 0, true).unwrap();
    let limit = slack(0.05, m);
    let rate = batch.report.anytime_crossing_rate;
    report(
        2,
        "anytime validity",
        rate <= limit,
        format!("crossing rate {rate} <= {limit:.5} ({:.1?})", start.elapsed()),
    );
}

#[test]
fn c3_online_fdr() {
    let start = Instant::now();
    // Control, three arms equal to it (true nulls), two arms 1σ above it.
    let instance = ProblemInstance::gaussian("fdr", &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0], 1.0).unwrap();
    let config = EngineConfig {
        policy: PolicyKind::Lucb,
        bound: BoundKind::AdaptiveLil,
        alpha: 0.05,
        alpha_investing: AlphaInvestingConfig::defaults_for(0.05),
        n_init: 20,
        max_steps: 3000,
        seed: 3,
        ..EngineConfig::default()
    };
    let m = 2000;
    let batch = run_batch(&config, &instance, m, 0, true).unwrap();
    // Stated gate; tighter than slack(0.05, 2000) ≈ 0.0646.
    let limit = 0.059;
    let fdr = batch.report.empirical_fdr;
    let discoveries: usize = batch.rows.iter().map(|r| r.n_discoveries).sum();
    report(
        3,
        "online FDR",
        fdr <= limit,
        format!(
            "empirical FDR {fdr} <= {limit:.5} ({discoveries} discoveries over {m} runs, {:.1?})",
            start.elapsed()
        ),
    );
}

/// Largest γ on a 1e-6 grid at which arm k fails to clear the control.
fn grid_boundary(s0: &ArmStats, sk: &ArmStats, sigma: f64) -> f64 {
    let clears = |g: f64| {
        let c0 = interval(s0, g, sigma, BoundKind::FixedSample).unwrap();
        let ck = interval(sk, g, sigma, BoundKind::FixedSample).unwrap();
        ck.lcb >= c0.ucb
    };
    let mut last_fail = 0.0;
    for i in 1..1_000_000u32 {
        let g = i as f64 * 1e-6;
        if !clears(g) {
            last_fail = g;
        }
    }
    last_fail
}

/// Bisection on γ using only the interval construction.
fn bisect_boundary(s0: &ArmStats, sk: &ArmStats, sigma: f64) -> f64 {
    let clears = |g: f64| {
        let c0 = interval(s0, g, sigma, BoundKind::FixedSample).unwrap();
        let ck = interval(sk, g, sigma, BoundKind::FixedSample).unwrap();
        ck.lcb >= c0.ucb
    };
    if !clears(1.0 - 1e-15) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-15);
    if clears(f64::MIN_POSITIVE) {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if clears(mid.max(f64::MIN_POSITIVE)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn c4_pvalue_oracle() {
    let start = Instant::now();
    let s0 = ArmStats::with(0, 4, 0.0);
    let sk = ArmStats::with(1, 4, 8.0);
    let closed = single_comparison_pvalue(&s0, &sk, 1.0, BoundKind::FixedSample).unwrap();
    let grid = grid_boundary(&s0, &sk, 1.0);
    let canonical_ok = (closed - (-2f64).exp()).abs() < 1e-12 && (closed - grid).abs() <= 1e-6;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n0 = rng.random_range(1..200u64);
        let nk = rng.random_range(1..200u64);
        let m0 = rng.random_range(-1.0..1.0);
        let mk = rng.random_range(-1.0..2.0);
        let sigma = rng.random_range(0.2..2.0);
        let a = ArmStats::with(0, n0, m0 * n0 as f64);
        let b = ArmStats::with(1, nk, mk * nk as f64);
        let closed = single_comparison_pvalue(&a, &b, sigma, BoundKind::FixedSample).unwrap();
        worst = worst.max((closed - bisect_boundary(&a, &b, sigma)).abs());
    }
    report(
        4,
        "p-value oracle equivalence",
        canonical_ok && worst <= 1e-6,
        format!(
            "canonical {closed:.9} (grid {grid:.6}, e^-2 {:.9}); max |closed - bisection| {worst:.2e} over 1000 pairs ({:.1?})",
            (-2f64).exp(),
            start.elapsed()
        ),
    );
}

#[test]
fn c5_concentration_gates() {
    let start = Instant::now();
    let m = 10_000u32;
    let grid = [(1u64, 1.0f64), (4, 0.5), (10, 0.5), (25, 0.3), (100, 0.2)];
    let mut rng = RngStream::new(5, 0);
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, eps) in grid {
        let mut hits = 0u32;
        for _ in 0..m {
            let mean = (0..n).map(|_| rng.standard_normal()).sum::<f64>() / n as f64;
            if mean >= eps {
                hits += 1;
            }
        }
        let freq = hits as f64 / m as f64;
        let bound = hoeffding_tail(n, eps, 1.0).unwrap();
        let se = (freq * (1.0 - freq) / m as f64).sqrt();
        ok &= freq <= bound + 3.0 * se;
        lines.push(format!("(n={n}, eps={eps}) {freq:.4}<={bound:.4}"));
    }
    report(
        5,
        "concentration gates",
        ok,
        format!("{} ({:.1?})", lines.join(", "), start.elapsed()),
    );
}

#[test]
fn c6_width_inflation() {
    // mpmath (30 digits) evaluation of the random-walk radius at n=100, δ=0.05, σ=1.
    const ORACLE: f64 = 0.232_029_511_496_993;
    let r = adaptive_radius(100, 0.05, 1.0).unwrap();
    let ratio = |n| adaptive_radius(n, 0.05, 1.0).unwrap() / fixed_radius(n, 0.05, 1.0).unwrap();
    let (small, large) = (ratio(100), ratio(1_000_000));
    report(
        6,
        "width inflation",
        large > small && (r - ORACLE).abs() <= 1e-6,
        format!("ratio(1e2) {small:.6} < ratio(1e6) {large:.6}; radius(100) {r:.9} vs oracle {ORACLE}"),
    );
}

#[test]
fn c7_difficulty_example() {
    // Gap lists as given for the example: (1, 1) before, (1/2, 1/2, 1) after.
    let pre = complexity_terms(&[1.0, 1.0]).unwrap();
    let post = complexity_terms(&[0.5, 0.5, 1.0]).unwrap();
    // The same insertion on concrete means moves only the top gap.
    let before = ProblemInstance::gaussian("three", &[1.0, 0.0, 0.0], 1.0).unwrap();
    let after = ProblemInstance::gaussian("three plus midpoint", &[1.0, 0.5, 0.0, 0.0], 1.0).unwrap();
    let inst_pre = complexity_terms(&compute_gaps(&before).unwrap()).unwrap();
    let inst_post = complexity_terms(&compute_gaps(&after).unwrap()).unwrap();
    report(
        7,
        "difficulty example",
        pre.top_term == 1.0
            && post.top_term == 4.0
            && pre.total_complexity == 2.0
            && post.total_complexity == 9.0
            && inst_pre.top_term == 1.0
            && inst_post.top_term == 4.0,
        format!(
            "top_term {} -> {}, total {} -> {}; instance means top_term {} -> {}",
            pre.top_term, post.top_term, pre.total_complexity, post.total_complexity, inst_pre.top_term, inst_post.top_term
        ),
    );
}

#[test]
fn c8_adaptivity_benefit() {
    let start = Instant::now();
    let instance = ProblemInstance::gaussian("dominant", &[0.0, 2.0, 1.0, 0.0, 0.0], 1.0).unwrap();
    let config = EngineConfig {
        bound: BoundKind::AdaptiveLil,
        delta: 0.1,
        max_steps: 1_000_000,
        seed: 77,
        ..EngineConfig::default()
    };
    let rows = compare_policies(&config, &instance, &[PolicyKind::Lucb, PolicyKind::Uniform], 500).unwrap();
    let (lucb, uniform) = (&rows[0], &rows[1]);
    let pass = match (lucb.median_stop_step, uniform.median_stop_step) {
        (Some(l), Some(u)) => l < u && lucb.completion_rate == 1.0 && uniform.completion_rate == 1.0,
        _ => false,
    };
    report(
        8,
        "adaptivity benefit",
        pass,
        format!(
            "median stop LUCB {:?} < uniform {:?} ({:.1?})",
            lucb.median_stop_step,
            uniform.median_stop_step,
            start.elapsed()
        ),
    );
}

#[test]
fn c9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("instance.json");
    std::fs::write(
        &inst,
        r#"{"label":"det","arms":[{"mean":0.0,"sigma":1.0,"is_control":true},{"mean":0.8,"sigma":1.0},{"mean":0.3,"sigma":1.0}]}"#,
    )
    .unwrap();
    let cfg = dir.path().join("experiment.json");
    std::fs::write(&cfg, r#"{"instance":"instance.json","policy":"lucb","max_steps":20000,"replications":40}"#).unwrap();
    let run = |out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_adaptest"))
            .args(["run", "--config"])
            .arg(&cfg)
            .args(["--seed", "13", "--out"])
            .arg(out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    let same = |name: &str| std::fs::read(a.join(name)).unwrap() == std::fs::read(b.join(name)).unwrap();
    report(
        9,
        "determinism",
        same("replications.csv") && same("summary.json") && same("trajectory_0.csv"),
        "replications.csv, summary.json and trajectory_0.csv byte-identical across runs".into(),
    );
}
