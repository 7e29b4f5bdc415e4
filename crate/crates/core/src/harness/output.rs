//! Result files.
//!
//! - `summary.json`: the [`BatchReport`] plus the engine config and instance.
//! - `replications.csv` (or `.json`): one row per replication with columns
//!   `replication, declared_best, stop_step, stop_reason, correct, p_final,
//!   n_discoveries, count_0 .. count_k`.
//! - `trajectory_<rep>.csv` (or `.json`) for retained replications, one row
//!   per round: `step, arm_sampled, p_anytime, alpha_t, wealth, rejected`.
//!   `arm_sampled` lists the arms drawn in the round separated by `;`.
//! - `plotdata.csv` when requested: long format
//!   `replication, step, series, value`.
//!
//! Floats are written in shortest round-trip form; lines end in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Batch, BatchReport, ReplicationRow};
use crate::config::EngineConfig;
use crate::engine::TrajectoryPoint;
use crate::instance::ProblemInstance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    #[serde(flatten)]
    report: &'a BatchReport,
    config: &'a EngineConfig,
    instance: &'a ProblemInstance,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn replications_csv(rows: &[ReplicationRow], num_arms: usize) -> String {
    let mut out = String::from("replication,declared_best,stop_step,stop_reason,correct,p_final,n_discoveries");
    for a in 0..num_arms {
        let _ = write!(out, ",count_{a}");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.replication,
            opt(r.declared_best),
            r.stop_step,
            r.stop_reason.as_str(),
            opt(r.correct),
            r.p_final,
            r.n_discoveries
        );
        for c in &r.per_arm_counts {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(points: &[TrajectoryPoint]) -> String {
    let mut out = String::from("step,arm_sampled,p_anytime,alpha_t,wealth,rejected\n");
    for p in points {
        let arms = p
            .arms_sampled
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.step, arms, p.p_anytime, p.alpha_t, p.wealth, p.rejected as u8
        );
    }
    out
}

pub fn plotdata_csv(trajectories: &[(u64, Vec<TrajectoryPoint>)]) -> String {
    let mut out = String::from("replication,step,series,value\n");
    for (rep, points) in trajectories {
        for p in points {
            for (series, value) in [("p_anytime", p.p_anytime), ("alpha_t", p.alpha_t), ("wealth", p.wealth)] {
                let _ = writeln!(out, "{rep},{},{series},{value}", p.step);
            }
        }
    }
    out
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    Ok(text)
}

/// Writes every result file for `batch` into `out_dir`, creating it if needed.
pub fn emit_results(
    batch: &Batch,
    config: &EngineConfig,
    instance: &ProblemInstance,
    out_dir: &Path,
    format: OutputFormat,
    plotdata: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let path = out_dir.join("summary.json");
    let summary = Summary {
        report: &batch.report,
        config,
        instance,
    };
    let text = json(&summary, &path)?;
    write(path, &text, &mut written)?;

    match format {
        OutputFormat::Csv => {
            write(
                out_dir.join("replications.csv"),
                &replications_csv(&batch.rows, instance.num_arms()),
                &mut written,
            )?;
            for (rep, points) in &batch.trajectories {
                write(out_dir.join(format!("trajectory_{rep}.csv")), &trajectory_csv(points), &mut written)?;
            }
        }
        OutputFormat::Json => {
            let path = out_dir.join("replications.json");
            let text = json(&batch.rows, &path)?;
            write(path, &text, &mut written)?;
            for (rep, points) in &batch.trajectories {
                let path = out_dir.join(format!("trajectory_{rep}.json"));
                let text = json(points, &path)?;
                write(path, &text, &mut written)?;
            }
        }
    }
    if plotdata {
        write(out_dir.join("plotdata.csv"), &plotdata_csv(&batch.trajectories), &mut written)?;
    }
    Ok(written)
}
