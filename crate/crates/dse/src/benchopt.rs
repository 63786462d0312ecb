//! Swarm optimizers on the classical benchmark suite.

use crate::error::{io_error, Error, Result};
use crate::report::write_csv;
use dse_core::metaheuristics::{optimize, suite, Algorithm, Benchmark, Bounds, SwarmConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const RUNS_FILE: &str = "benchopt_runs.csv";
pub const SUMMARY_FILE: &str = "benchopt_summary.csv";
pub const CURVES_FILE: &str = "benchopt_curves.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub optimizers: Vec<Algorithm>,
    /// Names `F1` … `F23`.
    pub functions: Vec<String>,
    pub seeds: Vec<u64>,
    pub swarm: SwarmConfig,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.optimizers.is_empty() || self.functions.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("benchopt needs at least one optimizer, function and seed".into()));
        }
        for f in &self.functions {
            Benchmark::by_name(f).map_err(|e| Error::Config(format!("--functions: {e}")))?;
        }
        Ok(())
    }
}

/// `F1,F5..F7` style list; `all` selects the whole suite.
pub fn parse_functions(list: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(suite().iter().map(|b| b.name.to_string()));
            continue;
        }
        let index = |s: &str| -> Result<usize> {
            let b = Benchmark::by_name(s).map_err(|e| Error::Config(format!("--functions: {e}")))?;
            Ok(suite().iter().position(|c| c.name == b.name).expect("suite member"))
        };
        match item.split_once("..") {
            Some((a, b)) => {
                let (i, j) = (index(a)?, index(b)?);
                if i > j {
                    return Err(Error::Config(format!("--functions: empty range {item}")));
                }
                out.extend(suite()[i..=j].iter().map(|b| b.name.to_string()));
            }
            None => out.push(suite()[index(item)?].name.to_string()),
        }
    }
    if out.is_empty() {
        return Err(Error::Config("--functions: no functions given".into()));
    }
    Ok(out)
}

pub fn parse_optimizers(list: &str) -> Result<Vec<Algorithm>> {
    let mut out: Vec<Algorithm> = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let a: Algorithm = item.parse().map_err(|e| Error::Config(format!("--optimizers: {e}")))?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("--optimizers: no optimizers given".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub optimizer: Algorithm,
    pub function: String,
    pub seed: u64,
    pub fitness: f64,
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub function: String,
    pub optimizer: Algorithm,
    pub runs: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub best: f64,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub runs: Vec<BenchRun>,
    pub summary: Vec<BenchSummary>,
}

impl BenchReport {
    pub fn summary_of(&self, function: &str, optimizer: Algorithm) -> Option<&BenchSummary> {
        self.summary.iter().find(|s| s.function == function && s.optimizer == optimizer)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let Some(last) = sorted.len().checked_sub(1) else { return f64::NAN };
    let pos = q.clamp(0.0, 1.0) * last as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Runs every optimizer on every function for every seed. Runs are
/// independent, so they execute concurrently and are collected in order.
pub fn run_benchopt(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let jobs: Vec<(Algorithm, Benchmark, u64)> = cfg
        .functions
        .iter()
        .flat_map(|f| {
            let b = Benchmark::by_name(f).expect("validated");
            cfg.optimizers.iter().flat_map(move |&a| cfg.seeds.iter().map(move |&s| (a, b, s)))
        })
        .collect();
    let runs: Vec<BenchRun> = jobs
        .par_iter()
        .map(|&(alg, b, seed)| {
            let r = optimize(alg, &b, &Bounds::of(&b), &cfg.swarm, seed, &[])?;
            Ok(BenchRun { optimizer: alg, function: b.name.to_string(), seed, fitness: r.fitness, curve: r.curve })
        })
        .collect::<Result<_>>()?;

    let mut summary = Vec::new();
    for chunk in runs.chunk_by(|a, b| a.function == b.function && a.optimizer == b.optimizer) {
        let mut v: Vec<f64> = chunk.iter().map(|r| r.fitness).collect();
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        summary.push(BenchSummary {
            function: chunk[0].function.clone(),
            optimizer: chunk[0].optimizer,
            runs: v.len(),
            median: quantile(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
            best: v[0],
            worst: v[v.len() - 1],
        });
    }
    Ok(BenchReport { runs, summary })
}

#[derive(Serialize)]
struct RunRow<'a> {
    optimizer: &'static str,
    function: &'a str,
    seed: u64,
    fitness: f64,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    optimizer: &'static str,
    function: &'a str,
    seed: u64,
    iteration: usize,
    best: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    function: &'a str,
    optimizer: &'static str,
    runs: usize,
    median: f64,
    q1: f64,
    q3: f64,
    iqr: f64,
    best: f64,
    worst: f64,
}

pub fn write_bench(dir: &Path, report: &BenchReport) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    write_csv(
        &dir.join(RUNS_FILE),
        report.runs.iter().map(|r| RunRow { optimizer: r.optimizer.name(), function: &r.function, seed: r.seed, fitness: r.fitness }),
    )?;
    write_csv(
        &dir.join(SUMMARY_FILE),
        report.summary.iter().map(|s| SummaryRow {
            function: &s.function,
            optimizer: s.optimizer.name(),
            runs: s.runs,
            median: s.median,
            q1: s.q1,
            q3: s.q3,
            iqr: s.iqr,
            best: s.best,
            worst: s.worst,
        }),
    )?;
    write_csv(
        &dir.join(CURVES_FILE),
        report.runs.iter().flat_map(|r| {
            r.curve.iter().enumerate().map(move |(iteration, &best)| CurveRow {
                optimizer: r.optimizer.name(),
                function: &r.function,
                seed: r.seed,
                iteration,
                best,
            })
        }),
    )?;
    Ok([RUNS_FILE, SUMMARY_FILE, CURVES_FILE].map(String::from).into())
}
