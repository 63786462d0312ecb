//! Run manifests: the fully resolved inputs of a command, sufficient to
//! reproduce every deterministic output byte.

use crate::benchopt::{run_benchopt, write_bench, BenchConfig};
use crate::case::{sha256_hex, Case};
use crate::config::{read_toml, write_toml, ExperimentConfig};
use crate::error::{io_error, Error, Result};
use crate::harness::{run_experiment, Outcome};
use crate::report::write_outcome;
use crate::tune::{run_tune, write_tune, TuneConfig, TuneOutcome};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Outputs that vary between otherwise identical runs.
pub const NONDETERMINISTIC_OUTPUTS: [&str; 1] = [crate::report::TIMING_FILE];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn hash(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(io_error(path))?;
        Ok(Self { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
    }
}

/// The command a manifest reproduces; exactly one is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Files the configuration was resolved from. Their content is already
    /// folded into the configuration.
    #[serde(default)]
    pub inputs: Vec<InputFile>,
    /// Names of the files written next to the manifest.
    pub outputs: Vec<String>,
    /// Hash of the case the run used.
    pub case_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchopt: Option<BenchConfig>,
}

/// Result of executing a manifest's command.
#[derive(Debug)]
pub enum RunResult {
    Estimate(Outcome),
    Tune(TuneOutcome),
    Benchopt(crate::benchopt::BenchReport),
}

impl RunManifest {
    fn new(command: &str, seed: u64, inputs: Vec<InputFile>) -> Self {
        Self {
            version: VERSION.to_string(),
            command: command.to_string(),
            seed,
            inputs,
            outputs: vec![],
            case_sha256: None,
            estimate: None,
            tune: None,
            benchopt: None,
        }
    }

    pub fn estimate(cfg: ExperimentConfig, inputs: Vec<InputFile>) -> Self {
        Self { estimate: Some(cfg.clone()), ..Self::new("estimate", cfg.seed, inputs) }
    }

    pub fn tune(cfg: TuneConfig, inputs: Vec<InputFile>) -> Self {
        Self { tune: Some(cfg.clone()), ..Self::new("tune", cfg.seed, inputs) }
    }

    pub fn benchopt(cfg: BenchConfig, inputs: Vec<InputFile>) -> Self {
        let seed = cfg.seeds.first().copied().unwrap_or(0);
        Self { benchopt: Some(cfg), ..Self::new("benchopt", seed, inputs) }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let m: Self = read_toml(path)?;
        let set = [m.estimate.is_some(), m.tune.is_some(), m.benchopt.is_some()].iter().filter(|b| **b).count();
        if set != 1 {
            return Err(Error::ConfigFile { path: path.into(), message: "manifest must hold exactly one command".into() });
        }
        Ok(m)
    }

    /// Runs the command and writes its outputs and this manifest into `dir`.
    pub fn execute(&mut self, dir: &Path) -> Result<RunResult> {
        let case_name = match (&self.estimate, &self.tune) {
            (Some(c), _) => Some(c.case.clone()),
            (_, Some(c)) => Some(c.case.clone()),
            _ => None,
        };
        let case = case_name.as_deref().map(Case::load).transpose()?;
        if let (Some(case), Some(expected)) = (&case, &self.case_sha256) {
            if &case.sha256 != expected {
                return Err(Error::Replay(format!(
                    "case {} has changed since the manifest was written (sha256 {} vs {expected})",
                    case.name, case.sha256
                )));
            }
        }
        self.case_sha256 = case.as_ref().map(|c| c.sha256.clone());
        let (result, outputs) = if let Some(cfg) = &self.estimate {
            let outcome = run_experiment(case.as_ref().expect("case"), cfg)?;
            outcome.check_failures()?;
            let files = write_outcome(dir, &outcome)?;
            (RunResult::Estimate(outcome), files)
        } else if let Some(cfg) = &self.tune {
            let outcome = run_tune(case.as_ref().expect("case"), cfg)?;
            let files = write_tune(dir, &outcome)?;
            (RunResult::Tune(outcome), files)
        } else if let Some(cfg) = &self.benchopt {
            let report = run_benchopt(cfg)?;
            let files = write_bench(dir, &report)?;
            (RunResult::Benchopt(report), files)
        } else {
            return Err(Error::Config("manifest holds no command".into()));
        };
        self.outputs = outputs;
        write_toml(&dir.join(MANIFEST_FILE), self)?;
        Ok(result)
    }
}

/// Re-runs the manifest at `path`, writing into `out`.
pub fn replay(path: &Path, out: &Path) -> Result<(RunManifest, RunResult)> {
    let mut m = RunManifest::read(path)?;
    if m.version != VERSION {
        return Err(Error::Replay(format!("manifest written by version {}, this is {VERSION}", m.version)));
    }
    let result = m.execute(out)?;
    Ok((m, result))
}
