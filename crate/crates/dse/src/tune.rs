//! Swarm tuning of filter coefficients on a reduced-fidelity objective.

use crate::case::Case;
use crate::config::{Coefficients, FilterSpec, HoltSpec, KernelSpec};
use crate::error::{io_error, Error, Result};
use crate::harness::TuningObjective;
use crate::report::write_csv;
use dse_core::filters::{Variant, DEFAULT_INITIAL_VARIANCE};
use dse_core::metaheuristics::{tune_coefficients, Algorithm, Bounds, CoefficientSpace, SwarmConfig};
use dse_core::scenarios::ScenarioSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const COEFFICIENTS_FILE: &str = "coefficients.toml";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

/// Trials of the tuning objective.
pub const DEFAULT_FIT_TRIALS: usize = 10;
/// Horizon of the tuning objective.
pub const DEFAULT_FIT_HORIZON: usize = 30;

/// Search box in file form; `lower`/`upper` follow `[α, β, σ₁ … σ_K]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundsSpec {
    pub fn of(b: &Bounds) -> Self {
        Self { lower: b.lower().to_vec(), upper: b.upper().to_vec() }
    }

    pub fn bounds(&self) -> Result<Bounds> {
        Ok(Bounds::new(self.lower.clone(), self.upper.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub case: String,
    /// Scenario of the objective; its horizon is the fit horizon.
    pub scenario: ScenarioSpec,
    /// Coefficients not being tuned, and the incumbent.
    pub filter: FilterSpec,
    /// Master seed of each objective trial.
    pub fit_seeds: Vec<u64>,
    pub algorithm: Algorithm,
    pub swarm: SwarmConfig,
    /// Seed of the optimizer.
    pub seed: u64,
    pub bounds: BoundsSpec,
    pub initial_variance: f64,
    pub holt: HoltSpec,
}

impl TuneConfig {
    /// Standard setup: 10 fit trials of 30 steps starting at the variant's
    /// standard coefficients.
    pub fn new(case: &str, mut scenario: ScenarioSpec, variant: Variant, seed: u64) -> Result<Self> {
        if variant == Variant::Ekf {
            return Err(Error::Config("--variant: EKF has no tunable coefficients".into()));
        }
        scenario.horizon = DEFAULT_FIT_HORIZON;
        scenario.trials = DEFAULT_FIT_TRIALS;
        let filter = FilterSpec::defaults(variant);
        let space = space_for(&filter)?;
        Ok(Self {
            case: case.to_string(),
            scenario,
            filter,
            fit_seeds: (0..DEFAULT_FIT_TRIALS as u64).map(|k| fit_seed(seed, k)).collect(),
            algorithm: Algorithm::Bwb,
            swarm: SwarmConfig::default(),
            seed,
            bounds: BoundsSpec::of(&space.bounds),
            initial_variance: DEFAULT_INITIAL_VARIANCE,
            holt: HoltSpec::default(),
        })
    }

    pub fn space(&self) -> Result<CoefficientSpace> {
        Ok(space_for(&self.filter)?.with_bounds(self.bounds.bounds()?)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter.variant == Variant::Ekf {
            return Err(Error::Config("EKF has no tunable coefficients".into()));
        }
        if self.fit_seeds.is_empty() {
            return Err(Error::Config("tuning needs at least one fit seed".into()));
        }
        self.scenario.validate().map_err(|e| Error::Config(format!("scenario {}: {e}", self.scenario.name)))?;
        let space = self.space()?;
        let incumbent = incumbent(&space, &self.filter);
        if !space.bounds.contains(&incumbent) {
            return Err(Error::Config(format!("standard coefficients {incumbent:?} lie outside the bounds")));
        }
        Ok(())
    }
}

/// Master seed of fit trial `k`, kept apart from the seeds of estimation runs.
pub fn fit_seed(seed: u64, k: u64) -> u64 {
    (1 << 32) + seed.wrapping_mul(1000) + k
}

fn space_for(filter: &FilterSpec) -> Result<CoefficientSpace> {
    let kernel = filter.kernel.as_ref().map(KernelSpec::mixture).transpose()?;
    let mut space = CoefficientSpace::for_kernel(kernel.as_ref());
    space.lambda = filter.lambda;
    Ok(space)
}

fn incumbent(space: &CoefficientSpace, filter: &FilterSpec) -> Vec<f64> {
    let kernel = filter.kernel.as_ref().and_then(|k| k.mixture().ok());
    space.encode(&filter.ut(), kernel.as_ref())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub coefficients: Coefficients,
    /// Objective of the standard coefficients on the same fit trials.
    pub incumbent_objective: f64,
    pub curve: Vec<f64>,
    pub evaluations: usize,
}

pub fn run_tune(case: &Case, cfg: &TuneConfig) -> Result<TuneOutcome> {
    cfg.validate()?;
    let space = cfg.space()?;
    let objective =
        TuningObjective::new(case, cfg.filter.clone(), space.clone(), &cfg.scenario, &cfg.fit_seeds, cfg.initial_variance, cfg.holt)?;
    let start = incumbent(&space, &cfg.filter);
    let result = tune_coefficients(&objective, &space, cfg.algorithm, &cfg.swarm, cfg.seed, Some(&start))?;
    let tuned = objective.candidate(&result.coefficients)?;
    let coefficients = Coefficients {
        variant: tuned.variant,
        alpha: tuned.alpha,
        beta: tuned.beta,
        lambda: tuned.lambda,
        kernel: tuned.kernel,
        objective: result.fitness,
    };
    Ok(TuneOutcome {
        coefficients,
        incumbent_objective: result.incumbent_fitness.unwrap_or(f64::INFINITY),
        curve: result.run.curve,
        evaluations: result.run.evaluations,
    })
}

pub fn write_tune(dir: &Path, outcome: &TuneOutcome) -> Result<Vec<String>> {
    #[derive(Serialize)]
    struct Row {
        iteration: usize,
        best: f64,
    }
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    crate::config::write_toml(&dir.join(COEFFICIENTS_FILE), &outcome.coefficients)?;
    write_csv(
        &dir.join(CONVERGENCE_FILE),
        outcome.curve.iter().enumerate().map(|(iteration, &best)| Row { iteration, best }),
    )?;
    Ok([COEFFICIENTS_FILE, CONVERGENCE_FILE].map(String::from).into())
}
