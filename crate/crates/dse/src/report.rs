//! Report files of an estimation run.
//!
//! Everything except `timing.csv` is a pure function of the manifest, so
//! those files are byte-identical between re-runs.

use crate::config::read_toml;
use crate::error::{io_error, Error, Result};
use crate::harness::{compare_report, Comparison, Outcome, Report, Timing};
use dse_core::filters::Variant;
use serde::Serialize;
use std::fs::File;
use std::path::Path;

pub const ARMSE_FILE: &str = "armse.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const TRIALS_FILE: &str = "trials.csv";

#[derive(Serialize)]
struct ArmseRow<'a> {
    filter: &'a str,
    step: usize,
    magnitude: f64,
    phase: f64,
}

#[derive(Serialize)]
struct TrialRow<'a> {
    filter: &'a str,
    trial: usize,
    step: usize,
    magnitude: f64,
    phase: f64,
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_error(path))
}

/// Per-step ARMSE of every filter, steps 1-based.
pub fn write_armse(path: &Path, report: &Report) -> Result<()> {
    write_csv(
        path,
        report.filters.iter().flat_map(|f| {
            f.magnitude.per_step.iter().zip(&f.phase.per_step).enumerate().map(|(t, (&magnitude, &phase))| ArmseRow {
                filter: &f.label,
                step: t + 1,
                magnitude,
                phase,
            })
        }),
    )
}

pub fn write_trials(path: &Path, report: &Report) -> Result<()> {
    write_csv(
        path,
        report.filters.iter().flat_map(|f| {
            f.trial_curves.iter().flat_map(move |c| {
                c.magnitude.iter().zip(&c.phase).enumerate().map(move |(t, (&magnitude, &phase))| TrialRow {
                    filter: &f.label,
                    trial: c.trial,
                    step: t + 1,
                    magnitude,
                    phase,
                })
            })
        }),
    )
}

pub fn write_comparison(path: &Path, cmp: &Comparison) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        case: &'a str,
        filter: &'a str,
        magnitude: f64,
        phase: f64,
        baseline: &'a str,
        improvement_percent: f64,
    }
    write_csv(
        path,
        cmp.rows.iter().map(|r| Row {
            case: &r.case,
            filter: &r.label,
            magnitude: r.magnitude,
            phase: r.phase,
            baseline: &cmp.baseline,
            improvement_percent: r.improvement,
        }),
    )
}

pub fn write_timing(path: &Path, timing: &[Timing]) -> Result<()> {
    write_csv(path, timing)
}

pub fn write_summary(path: &Path, report: &Report) -> Result<()> {
    crate::config::write_toml(path, report)
}

pub fn read_summary(path: &Path) -> Result<Report> {
    read_toml(path)
}

/// Comparison baseline: plain UKF when present, otherwise the first filter.
pub fn default_baseline(report: &Report) -> Option<&str> {
    report
        .filters
        .iter()
        .find(|f| f.variant == Variant::Ukf && f.label == Variant::Ukf.name())
        .or(report.filters.first())
        .map(|f| f.label.as_str())
}

/// Writes every report file into `dir` and returns their names.
pub fn write_outcome(dir: &Path, outcome: &Outcome) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let report = &outcome.report;
    write_armse(&dir.join(ARMSE_FILE), report)?;
    write_summary(&dir.join(SUMMARY_FILE), report)?;
    let baseline = default_baseline(report).ok_or_else(|| Error::Config("report has no filters".into()))?;
    write_comparison(&dir.join(COMPARISON_FILE), &compare_report(std::slice::from_ref(report), baseline)?)?;
    write_timing(&dir.join(TIMING_FILE), &outcome.timing)?;
    let mut files: Vec<String> = [ARMSE_FILE, SUMMARY_FILE, COMPARISON_FILE, TIMING_FILE].map(String::from).into();
    if report.filters.iter().any(|f| !f.trial_curves.is_empty()) {
        write_trials(&dir.join(TRIALS_FILE), report)?;
        files.push(TRIALS_FILE.to_string());
    }
    Ok(files)
}
