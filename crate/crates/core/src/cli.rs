//! The `adaptest` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::concentration::BoundKind;
use crate::config::{load_config, ExperimentConfig};
use crate::difficulty::DifficultyReport;
use crate::harness::{compare_policies, emit_results, run_batch, OutputFormat};
use crate::inference::single_comparison_pvalue;
use crate::instance::{ArmStats, ProblemInstance};
use crate::policies::PolicyKind;
use crate::{ConfigIssue, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "adaptest", version, about = "Adaptive online testing: best-arm identification with anytime-valid p-values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Monte Carlo replications and write result files.
    Run(RunArgs),
    /// Run several policies on matched seeds and report them side by side.
    Compare(CompareArgs),
    /// Print the difficulty terms of an instance.
    Complexity(ComplexityArgs),
    /// Compute one control-vs-arm p-value from summary statistics.
    Pvalue(PvalueArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    #[value(alias = "fixed_sample")]
    Fixed,
    #[value(alias = "adaptive_lil")]
    Adaptive,
}

impl From<BoundArg> for BoundKind {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::Fixed => BoundKind::FixedSample,
            BoundArg::Adaptive => BoundKind::AdaptiveLil,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment config file (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Instance file (JSON); overrides the config's `instance`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Base seed; replication i uses stream (seed, i).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format for result files.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Stop a replication at its first discovery.
    #[arg(long)]
    pub stop_on_discovery: bool,
    /// Edge added to the control arm's mean inside policy bounds.
    #[arg(long)]
    pub epsilon_edge: Option<f64>,
    /// Use the alpha-investing level for policy confidence bounds.
    #[arg(long)]
    pub couple_levels: bool,
    /// Also write long-format plotdata.csv.
    #[arg(long)]
    pub plotdata: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Comma-separated policies (uniform,ae,ucb,lucb).
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    /// Instance file (JSON).
    #[arg(long)]
    pub instance: PathBuf,
    /// Confidence level for the ln(1/delta) term.
    #[arg(long)]
    pub delta: Option<f64>,
    /// `json` prints JSON; otherwise a key-value table.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct PvalueArgs {
    /// Control arm sample count.
    #[arg(long)]
    pub n0: u64,
    /// Control arm empirical mean.
    #[arg(long, allow_negative_numbers = true)]
    pub mean0: f64,
    /// Treatment arm sample count.
    #[arg(long)]
    pub nk: u64,
    /// Treatment arm empirical mean.
    #[arg(long, allow_negative_numbers = true)]
    pub meank: f64,
    /// Sub-Gaussian scale shared by both arms.
    #[arg(long)]
    pub sigma: f64,
    /// Confidence bound to invert.
    #[arg(long, value_enum, default_value = "adaptive")]
    pub bound: BoundArg,
}

/// An error tagged with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(err: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: err.to_string(),
        }
    }

    fn runtime(err: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: err.to_string(),
        }
    }

    fn classify(err: Error) -> Self {
        if err.is_config() {
            Self::config(err)
        } else {
            Self::runtime(err)
        }
    }
}

/// Loads the config, applies flag overrides and the instance.
fn resolve(args: &ExperimentArgs) -> Result<(ExperimentConfig, ProblemInstance), Failure> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).map_err(Failure::config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.engine.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.replications = reps;
    }
    if let Some(eps) = args.epsilon_edge {
        cfg.engine.epsilon_edge = eps;
    }
    cfg.engine.stop_on_discovery |= args.stop_on_discovery;
    cfg.engine.couple_levels |= args.couple_levels;
    if let Some(inst) = &args.instance {
        cfg.instance_path = Some(inst.clone());
    }
    let inst_path = cfg.instance_path.clone().ok_or_else(|| {
        Failure::config(Error::Config(vec![ConfigIssue::new(
            "instance",
            "no instance given (use --instance or the config key)",
        )]))
    })?;
    let instance = ProblemInstance::load(&inst_path).map_err(Failure::config)?;
    let mut issues = cfg.engine.issues_for(&instance);
    if cfg.replications == 0 {
        issues.push(ConfigIssue::new("replications", "must be at least 1"));
    }
    if !issues.is_empty() {
        return Err(Failure::config(Error::Config(issues)));
    }
    Ok((cfg, instance))
}

fn format_of(arg: Option<FormatArg>) -> OutputFormat {
    match arg {
        Some(FormatArg::Json) => OutputFormat::Json,
        _ => OutputFormat::Csv,
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (cfg, instance) = resolve(&args.common)?;
    let out_dir = args.common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let batch = run_batch(&cfg.engine, &instance, cfg.replications, cfg.trajectories, true).map_err(Failure::classify)?;
    let files = emit_results(
        &batch,
        &cfg.engine,
        &instance,
        &out_dir,
        format_of(args.common.format),
        args.common.plotdata,
    )
    .map_err(Failure::runtime)?;
    let r = &batch.report;
    writeln!(
        out,
        "replications {}\nmisidentification_rate {}\ncompletion_rate {}\nmedian_stop_step {}\nempirical_fdr {}\nanytime_crossing_rate {}",
        r.replications,
        r.misidentification_rate,
        r.completion_rate,
        r.median_stop_step.map(|v| v.to_string()).unwrap_or_else(|| "none".into()),
        r.empirical_fdr,
        r.anytime_crossing_rate
    )
    .map_err(Failure::runtime)?;
    for f in files {
        writeln!(out, "wrote {}", f.display()).map_err(Failure::runtime)?;
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (mut cfg, instance) = resolve(&args.common)?;
    if let Some(names) = &args.policies {
        let mut issues = Vec::new();
        cfg.policies = names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| {
                let p = PolicyKind::parse(n.trim());
                if p.is_none() {
                    issues.push(ConfigIssue::new(format!("policies[{i}]"), format!("unknown policy `{n}`")));
                }
                p
            })
            .collect();
        if !issues.is_empty() {
            return Err(Failure::config(Error::Config(issues)));
        }
    }
    let rows = compare_policies(&cfg.engine, &instance, &cfg.policies, cfg.replications).map_err(Failure::classify)?;
    let mut table = String::from("policy,replications,misidentification_rate,completion_rate,median_stop_step,mean_stop_step\n");
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.policy.as_str(),
            r.replications,
            r.misidentification_rate,
            r.completion_rate,
            fmt(r.median_stop_step),
            fmt(r.mean_stop_step)
        ));
    }
    out.write_all(table.as_bytes()).map_err(Failure::runtime)?;
    if let Some(dir) = &args.common.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::runtime(Error::io(dir, e)))?;
        let (name, body) = match format_of(args.common.format) {
            OutputFormat::Csv => ("compare.csv", table),
            OutputFormat::Json => (
                "compare.json",
                serde_json::to_string_pretty(&rows).map_err(Failure::runtime)? + "\n",
            ),
        };
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Failure::runtime(Error::io(&path, e)))?;
        writeln!(out, "wrote {}", path.display()).map_err(Failure::runtime)?;
    }
    Ok(())
}

fn cmd_complexity(args: &ComplexityArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let instance = ProblemInstance::load(&args.instance).map_err(Failure::config)?;
    let report = DifficultyReport::for_instance(&instance, args.delta).map_err(Failure::config)?;
    let text = match args.format {
        Some(FormatArg::Json) => serde_json::to_string_pretty(&report).map_err(Failure::runtime)? + "\n",
        _ => report.to_table(),
    };
    out.write_all(text.as_bytes()).map_err(Failure::runtime)
}

fn cmd_pvalue(args: &PvalueArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let stats0 = ArmStats::with(0, args.n0, args.mean0 * args.n0 as f64);
    let statsk = ArmStats::with(1, args.nk, args.meank * args.nk as f64);
    let p = single_comparison_pvalue(&stats0, &statsk, args.sigma, args.bound.into()).map_err(Failure::config)?;
    writeln!(out, "{p}").map_err(Failure::runtime)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn parse_and_dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Complexity(a) => cmd_complexity(a, out),
        Command::Pvalue(a) => cmd_pvalue(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
