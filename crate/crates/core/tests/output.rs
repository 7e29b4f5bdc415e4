use adaptest::config::EngineConfig;
use adaptest::harness::{emit_results, run_batch, OutputFormat};
use adaptest::instance::ProblemInstance;
use adaptest::policies::PolicyKind;

fn three() -> ProblemInstance {
    ProblemInstance::gaussian("three", &[0.0, 0.8, 0.3], 1.0).unwrap()
}

#[test]
fn empty_batch_writes_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EngineConfig::default();
    let batch = run_batch(&cfg, &three(), 0, 0, true).unwrap();
    emit_results(&batch, &cfg, &three(), dir.path(), OutputFormat::Csv, true).unwrap();
    let reps = std::fs::read_to_string(dir.path().join("replications.csv")).unwrap();
    assert_eq!(
        reps,
        "replication,declared_best,stop_step,stop_reason,correct,p_final,n_discoveries,count_0,count_1,count_2\n"
    );
    let plot = std::fs::read_to_string(dir.path().join("plotdata.csv")).unwrap();
    assert_eq!(plot, "replication,step,series,value\n");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replications"], 0);
    assert!(summary["median_stop_step"].is_null());
}

#[test]
fn counts_and_trajectories_are_consistent() {
    for policy in PolicyKind::ALL {
        let cfg = EngineConfig {
            policy,
            max_steps: 5000,
            seed: 4,
            ..EngineConfig::default()
        };
        let batch = run_batch(&cfg, &three(), 20, 20, true).unwrap();
        for (row, (rep, traj)) in batch.rows.iter().zip(&batch.trajectories) {
            assert_eq!(row.replication, *rep);
            assert_eq!(row.per_arm_counts.iter().sum::<u64>(), row.stop_step, "{policy:?}");
            assert!(row.stop_step <= cfg.max_steps);
            let warm = 3 * cfg.n_init;
            let drawn: usize = traj.iter().map(|p| p.arms_sampled.len()).sum();
            assert_eq!(warm + drawn as u64, row.stop_step);
            assert!(traj.windows(2).all(|w| w[0].p_anytime >= w[1].p_anytime && w[0].step < w[1].step));
            assert!(traj.iter().all(|p| p.wealth >= 0.0));
            assert!(row.p_final <= traj.last().map_or(1.0, |p| p.p_anytime));
        }
    }
}

#[test]
fn json_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EngineConfig {
        max_steps: 5000,
        ..EngineConfig::default()
    };
    let batch = run_batch(&cfg, &three(), 5, 2, true).unwrap();
    let written = emit_results(&batch, &cfg, &three(), dir.path(), OutputFormat::Json, false).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["summary.json", "replications.json", "trajectory_0.json", "trajectory_1.json"]);
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("replications.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
}
