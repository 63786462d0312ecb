//! The `dse` command line.
//!
//! Exit status 0 on success, 1 on usage and configuration errors, 2 when an
//! experiment loses more than the allowed share of trials.

use crate::benchopt::{parse_functions, parse_optimizers, BenchConfig};
use crate::case::Case;
use crate::config::{load_scenario, read_toml, Coefficients, ExperimentConfig, FilterSpec};
use crate::error::{Error, Result};
use crate::harness::{compare_report, with_jobs};
use crate::manifest::{replay, InputFile, RunManifest, RunResult, MANIFEST_FILE};
use crate::tune::{fit_seed, BoundsSpec, TuneConfig};
use clap::{Args, Parser, Subcommand};
use dse_core::filters::Variant;
use dse_core::metaheuristics::SwarmConfig;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Trials of a command-line estimation run unless `--trials` is given.
pub const DEFAULT_CLI_TRIALS: usize = 20;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILURES: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dse", version, about = "Robust dynamic state estimation on IEEE test networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo comparison of filters on one case and scenario.
    Estimate(EstimateArgs),
    /// Tune filter coefficients with a swarm optimizer.
    Tune(TuneArgs),
    /// Compare swarm optimizers on the benchmark suite.
    Benchopt(BenchArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Bundled case name (ieee14, ieee30, ieee57, or with `.m`) or case file.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub case: Option<String>,
    /// Preset name (scenario1..3) or scenario TOML file.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Comma-separated filters.
    #[arg(long, default_value = "ekf,ukf,mcc,ckmc,ckmmc", conflicts_with = "config")]
    pub filters: String,
    /// Tuned coefficient file; adds a `BWB-<variant>` filter. Repeatable.
    #[arg(long, value_name = "FILE", conflicts_with = "config")]
    pub coeffs: Vec<PathBuf>,
    /// Monte-Carlo trials D.
    #[arg(long, conflicts_with = "config")]
    pub trials: Option<usize>,
    /// Steps per trial T; defaults to the scenario's.
    #[arg(long, conflicts_with = "config")]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0, conflicts_with = "config")]
    pub seed: u64,
    /// Keep per-trial error curves (`trials.csv`).
    #[arg(long, conflicts_with = "config")]
    pub record_trials: bool,
    /// Record the smallest posterior eigenvalue of every update.
    #[arg(long, conflicts_with = "config")]
    pub check_covariance: bool,
    /// Complete experiment TOML instead of the flags above.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub case: String,
    #[arg(long)]
    pub scenario: String,
    /// Filter whose coefficients are tuned.
    #[arg(long, default_value = "ckmmc")]
    pub variant: String,
    /// Population size ϕ.
    #[arg(long, default_value_t = 30)]
    pub agents: usize,
    /// Iteration budget.
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    /// TOML with `lower` and `upper` arrays over `[α, β, σ…]`.
    #[arg(long, value_name = "FILE")]
    pub bounds: Option<PathBuf>,
    /// bwb, bwo or pso.
    #[arg(long, default_value = "bwb")]
    pub optimizer: String,
    /// Trials of the objective.
    #[arg(long)]
    pub fit_trials: Option<usize>,
    /// Steps per objective trial.
    #[arg(long)]
    pub fit_horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "bwb,bwo,pso")]
    pub optimizers: String,
    /// Names or ranges such as `F1,F9..F13`, or `all`.
    #[arg(long, default_value = "all")]
    pub functions: String,
    /// Runs per optimizer and function, seeds `0..k`.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    #[arg(long, default_value_t = 30)]
    pub agents: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest file, or the directory holding it.
    pub manifest: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// Resolves estimation flags into a complete configuration.
pub fn estimate_config(args: &EstimateArgs) -> Result<(ExperimentConfig, Vec<InputFile>)> {
    if let Some(path) = &args.config {
        let cfg: ExperimentConfig = read_toml(path)?;
        cfg.validate().map_err(|e| Error::ConfigFile { path: path.clone(), message: e.to_string() })?;
        return Ok((cfg, vec![InputFile::hash(path)?]));
    }
    let (case, scenario) = (args.case.as_deref().expect("clap"), args.scenario.as_deref().expect("clap"));
    let mut inputs = Vec::new();
    for spec in [case, scenario] {
        let p = Path::new(spec);
        if p.is_file() {
            inputs.push(InputFile::hash(p)?);
        }
    }
    let mut sc = load_scenario(scenario).map_err(|e| Error::Config(format!("--scenario: {e}")))?;
    sc.trials = args.trials.unwrap_or(DEFAULT_CLI_TRIALS);
    if let Some(h) = args.horizon {
        sc.horizon = h;
    }
    let mut filters = FilterSpec::parse_list(&args.filters)?;
    for path in &args.coeffs {
        let c = Coefficients::read(path).map_err(|e| Error::Config(format!("--coeffs: {e}")))?;
        filters.push(c.filter(&format!("BWB-{}", c.variant.name()))?);
        inputs.push(InputFile::hash(path)?);
    }
    let mut cfg = ExperimentConfig::new(case, sc, filters, args.seed);
    cfg.record_trials = args.record_trials;
    cfg.check_covariance = args.check_covariance;
    cfg.validate()?;
    Ok((cfg, inputs))
}

pub fn tune_config(args: &TuneArgs) -> Result<(TuneConfig, Vec<InputFile>)> {
    let variant: Variant = args.variant.parse().map_err(|e| Error::Config(format!("--variant: {e}")))?;
    let scenario = load_scenario(&args.scenario).map_err(|e| Error::Config(format!("--scenario: {e}")))?;
    let mut cfg = TuneConfig::new(&args.case, scenario, variant, args.seed)?;
    let mut inputs = Vec::new();
    if Path::new(&args.scenario).is_file() {
        inputs.push(InputFile::hash(Path::new(&args.scenario))?);
    }
    cfg.algorithm = args.optimizer.parse().map_err(|e| Error::Config(format!("--optimizer: {e}")))?;
    cfg.swarm = SwarmConfig::new(args.agents, args.iters);
    if let Some(k) = args.fit_trials {
        cfg.fit_seeds = (0..k as u64).map(|i| fit_seed(args.seed, i)).collect();
        cfg.scenario.trials = k;
    }
    if let Some(h) = args.fit_horizon {
        cfg.scenario.horizon = h;
    }
    if let Some(path) = &args.bounds {
        let b: BoundsSpec = read_toml(path).map_err(|e| Error::Config(format!("--bounds: {e}")))?;
        cfg.bounds = b;
        inputs.push(InputFile::hash(path)?);
    }
    if args.agents == 0 || args.iters == 0 {
        return Err(Error::Config("--agents and --iters must be positive".into()));
    }
    cfg.validate().map_err(|e| Error::Config(format!("--bounds: {e}")))?;
    Ok((cfg, inputs))
}

pub fn bench_config(args: &BenchArgs) -> Result<BenchConfig> {
    if args.seeds == 0 || args.agents == 0 || args.iters == 0 {
        return Err(Error::Config("--seeds, --agents and --iters must be positive".into()));
    }
    let cfg = BenchConfig {
        optimizers: parse_optimizers(&args.optimizers)?,
        functions: parse_functions(&args.functions)?,
        seeds: (0..args.seeds).collect(),
        swarm: SwarmConfig::new(args.agents, args.iters),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(result: &RunResult, out: &mut dyn Write) -> std::io::Result<()> {
    match result {
        RunResult::Estimate(o) => {
            let r = &o.report;
            writeln!(out, "{} {} D={} T={} seed={}", r.case, r.scenario, r.trials, r.horizon, r.seed)?;
            let baseline = crate::report::default_baseline(r).unwrap_or_default();
            if let Ok(cmp) = compare_report(std::slice::from_ref(r), baseline) {
                writeln!(out, "{:<16} {:>12} {:>12} {:>10}", "filter", "magnitude", "phase", "vs ".to_string() + baseline)?;
                for row in &cmp.rows {
                    writeln!(out, "{:<16} {:>12.6} {:>12.6} {:>9.1}%", row.label, row.magnitude, row.phase, row.improvement)?;
                }
            }
        }
        RunResult::Tune(t) => {
            let c = &t.coefficients;
            writeln!(out, "{} alpha={} beta={} objective={} (standard {})", c.variant, c.alpha, c.beta, c.objective, t.incumbent_objective)?;
            if let Some(k) = &c.kernel {
                writeln!(out, "kernel {:?} weights {:?} shapes {:?}", k.family, k.weights, k.shapes)?;
            }
        }
        RunResult::Benchopt(b) => {
            writeln!(out, "{:<5} {:<4} {:>13} {:>13}", "fn", "opt", "median", "iqr")?;
            for s in &b.summary {
                writeln!(out, "{:<5} {:<4} {:>13.6e} {:>13.6e}", s.function, s.optimizer.name(), s.median, s.iqr)?;
            }
        }
    }
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let (mut manifest, common) = match cli.command {
        Command::Estimate(a) => {
            let (cfg, inputs) = estimate_config(&a)?;
            // Fail on unknown cases before any computation.
            Case::load(&cfg.case)?;
            (RunManifest::estimate(cfg, inputs), a.common)
        }
        Command::Tune(a) => {
            let (cfg, inputs) = tune_config(&a)?;
            Case::load(&cfg.case)?;
            (RunManifest::tune(cfg, inputs), a.common)
        }
        Command::Benchopt(a) => (RunManifest::benchopt(bench_config(&a)?, vec![]), a.common),
        Command::Replay(a) => {
            let path = if a.manifest.is_dir() { a.manifest.join(MANIFEST_FILE) } else { a.manifest.clone() };
            let (_, result) = with_jobs(a.common.jobs, || replay(&path, &a.common.out))??;
            return summarize(&result, out).map_err(crate::error::io_error(&a.common.out));
        }
    };
    let result = with_jobs(common.jobs, || manifest.execute(&common.out))??;
    summarize(&result, out).map_err(crate::error::io_error(&common.out))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::TooManyFailures { .. } => EXIT_FAILURES,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
