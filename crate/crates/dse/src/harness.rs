//! Monte-Carlo experiments over paired data.
//!
//! Each trial draws its truth and measurements once from streams derived
//! from `(seed, trial)`, and every filter consumes those same bytes, starting
//! from the case operating point. Trials may run concurrently; results are reduced in trial order.

use crate::case::Case;
use crate::config::{ExperimentConfig, FilterSpec, HoltSpec};
use crate::error::{Error, Result};
use dse_core::filters::{run_filter, FilterConfig, Variant};
use dse_core::grid::{GridObservation, HoltState};
use dse_core::metrics::{improvement, ArmseAccumulator, ArmseCurve};
use dse_core::rng::stream;
use dse_core::scenarios::{generate_measurements, generate_truth, ScenarioSpec};
use dse_core::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::time::Instant;

/// Share of failed trials above which an experiment is rejected.
pub const FAILURE_LIMIT: f64 = 0.10;

pub const IMPROVEMENT_FORMULA: &str = "(baseline - candidate) / baseline * 100";

/// Inputs of one trial shared by every filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    /// `x_1 … x_T`.
    pub truth: Vec<DVector<f64>>,
    /// `y_1 … y_T`.
    pub measurements: Vec<DVector<f64>>,
    /// `x̂_{0|0} = x_0`.
    pub initial: DVector<f64>,
    /// SHA-256 of everything a filter reads.
    pub sha256: String,
}

fn content_hash(measurements: &[DVector<f64>], initial: &DVector<f64>) -> String {
    let mut h = Sha256::new();
    for v in measurements.iter().chain(std::iter::once(initial)) {
        for x in v.iter() {
            h.update(x.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl TrialData {
    /// Draws trial `trial` of `scenario` from master seed `seed`.
    pub fn generate(case: &Case, scenario: &ScenarioSpec, seed: u64, trial: u64) -> Result<Self> {
        let sys = &case.system;
        let obs = GridObservation::new(sys, &case.plan)?;
        let x0 = sys.operating_point();
        let truth = generate_truth(
            sys,
            &x0,
            scenario.horizon,
            &scenario.process_noise(),
            &scenario.events,
            &mut stream(seed, &[trial, 0]),
        )?;
        let measurements =
            generate_measurements(&obs, &truth, &scenario.measurement_noise(), &scenario.events, &mut stream(seed, &[trial, 1]));
        let initial = x0;
        let sha256 = content_hash(&measurements, &initial);
        Ok(Self { truth, measurements, initial, sha256 })
    }

    pub fn verify(&self) -> bool {
        content_hash(&self.measurements, &self.initial) == self.sha256
    }
}

/// Squared errors and diagnostics of one filter on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrial {
    pub magnitude_sq: Vec<f64>,
    pub phase_sq: Vec<f64>,
    /// Fixed-point iterations and fallback flag of each update.
    pub iterations: Vec<(usize, bool)>,
    pub pinv_updates: usize,
    pub min_eigenvalue: Option<f64>,
    pub max_asymmetry: f64,
    /// Wall-clock time inside the filter recursion only.
    pub seconds: f64,
}

/// Runs one configured filter on one trial.
pub fn run_trial_filter(
    case: &Case,
    cfg: &FilterConfig,
    holt: HoltSpec,
    initial_variance: f64,
    data: &TrialData,
) -> Result<FilterTrial> {
    assert!(data.verify(), "trial data changed between filters");
    let sys = &case.system;
    let obs = GridObservation::new(sys, &case.plan)?;
    let n = sys.state_dim();
    let transition = HoltState::new(&data.initial, holt.upsilon, holt.theta)?;
    let p0 = DMatrix::identity(n, n) * initial_variance;
    let start = Instant::now();
    let traj = run_filter(cfg, transition, &obs, &data.measurements, &data.initial, &p0)?;
    let seconds = start.elapsed().as_secs_f64();

    let layout = sys.layout();
    let mut out = FilterTrial {
        magnitude_sq: Vec::with_capacity(traj.len()),
        phase_sq: Vec::with_capacity(traj.len()),
        iterations: Vec::with_capacity(traj.len()),
        pinv_updates: 0,
        min_eigenvalue: None,
        max_asymmetry: 0.0,
        seconds,
    };
    for (rec, x) in traj.records.iter().zip(&data.truth) {
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
        out.magnitude_sq.push(sq(layout.magnitudes(&rec.mean), layout.magnitudes(x)));
        out.phase_sq.push(sq(layout.phases(&rec.mean), layout.phases(x)));
        out.iterations.push((rec.iterations, rec.fallback));
        out.pinv_updates += rec.used_pinv as usize;
        out.max_asymmetry = out.max_asymmetry.max(rec.asymmetry);
        if let Some(e) = rec.min_eigenvalue {
            out.min_eigenvalue = Some(out.min_eigenvalue.map_or(e, |m: f64| m.min(e)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub message: String,
}

/// Per-step RMSE of a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCurve {
    pub trial: usize,
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub label: String,
    pub variant: Variant,
    pub magnitude: ArmseCurve,
    pub phase: ArmseCurve,
    /// Trials that contributed to the ARMSE.
    pub trials: usize,
    pub failures: Vec<TrialFailure>,
    pub updates: usize,
    /// Entry `k` counts updates that met the tolerance after `k` iterations.
    pub iteration_histogram: Vec<usize>,
    pub mean_iterations: f64,
    pub fallbacks: usize,
    pub pinv_updates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
    pub max_asymmetry: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trial_curves: Vec<TrialCurve>,
}

impl FilterReport {
    /// Share of updates that stopped on the tolerance within `k` iterations.
    pub fn converged_within(&self, k: usize) -> f64 {
        if self.updates == 0 {
            return 1.0;
        }
        let within: usize = self.iteration_histogram.iter().take(k + 1).sum();
        within as f64 / self.updates as f64
    }
}

/// Everything an experiment produces except timing, which varies between
/// runs and is kept in [`Timing`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub case: String,
    pub case_sha256: String,
    pub scenario: String,
    pub seed: u64,
    pub trials: usize,
    pub horizon: usize,
    /// Hash over the per-trial data hashes in trial order.
    pub data_sha256: String,
    pub filters: Vec<FilterReport>,
}

impl Report {
    pub fn filter(&self, label: &str) -> Option<&FilterReport> {
        self.filters.iter().find(|f| f.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub steps: usize,
    pub seconds: f64,
    pub seconds_per_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub timing: Vec<Timing>,
}

impl Outcome {
    /// Fails when any filter lost more than [`FAILURE_LIMIT`] of its trials.
    pub fn check_failures(&self) -> Result<()> {
        for f in &self.report.filters {
            let failed = f.failures.len();
            if failed as f64 > FAILURE_LIMIT * self.report.trials as f64 {
                return Err(Error::TooManyFailures { label: f.label.clone(), failed, trials: self.report.trials });
            }
        }
        Ok(())
    }
}

type TrialResult = (Option<String>, Vec<std::result::Result<FilterTrial, String>>);

/// Runs `f` on a pool of `jobs` threads, or the global pool when `None`.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Config(format!("--jobs {j}: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every filter of `cfg` on `cfg.scenario.trials` paired trials.
pub fn run_experiment(case: &Case, cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let (n, m) = (case.system.state_dim(), case.plan.len());
    let configs: Vec<FilterConfig> = cfg
        .filters
        .iter()
        .map(|f| {
            let mut c = f.filter_config(n, m)?;
            c.check_covariance = cfg.check_covariance;
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let trials = cfg.scenario.trials;

    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|trial| match TrialData::generate(case, &cfg.scenario, cfg.seed, trial as u64) {
            Err(e) => (None, vec![Err(format!("data generation: {e}")); configs.len()]),
            Ok(data) => {
                let runs = configs
                    .iter()
                    .map(|c| run_trial_filter(case, c, cfg.holt, cfg.initial_variance, &data).map_err(|e| e.to_string()))
                    .collect();
                (Some(data.sha256), runs)
            }
        })
        .collect();

    let horizon = cfg.scenario.horizon;
    let layout = case.system.layout();
    let (mags, phases) = (layout.bus_count, layout.phase_count());
    let mut data_hash = Sha256::new();
    let mut reports = Vec::with_capacity(configs.len());
    let mut timing = Vec::with_capacity(configs.len());
    for (k, spec) in cfg.filters.iter().enumerate() {
        let mut mag = ArmseAccumulator::new(horizon, mags);
        let mut pha = ArmseAccumulator::new(horizon, phases);
        let mut rep = FilterReport {
            label: spec.label.clone(),
            variant: spec.variant,
            magnitude: ArmseCurve { per_step: vec![], scalar: 0.0 },
            phase: ArmseCurve { per_step: vec![], scalar: 0.0 },
            trials: 0,
            failures: vec![],
            updates: 0,
            iteration_histogram: vec![],
            mean_iterations: 0.0,
            fallbacks: 0,
            pinv_updates: 0,
            min_eigenvalue: None,
            max_asymmetry: 0.0,
            trial_curves: vec![],
        };
        let (mut seconds, mut iter_sum) = (0.0, 0usize);
        for (trial, (hash, runs)) in results.iter().enumerate() {
            if k == 0 {
                data_hash.update(hash.as_deref().unwrap_or("-").as_bytes());
            }
            let ft = match &runs[k] {
                Ok(ft) => ft,
                Err(message) => {
                    rep.failures.push(TrialFailure { trial, message: message.clone() });
                    continue;
                }
            };
            mag.add_squared_errors(&ft.magnitude_sq)?;
            pha.add_squared_errors(&ft.phase_sq)?;
            rep.trials += 1;
            for &(it, fallback) in &ft.iterations {
                iter_sum += it;
                if fallback {
                    rep.fallbacks += 1;
                    continue;
                }
                if rep.iteration_histogram.len() <= it {
                    rep.iteration_histogram.resize(it + 1, 0);
                }
                rep.iteration_histogram[it] += 1;
            }
            rep.updates += ft.iterations.len();
            rep.pinv_updates += ft.pinv_updates;
            rep.max_asymmetry = rep.max_asymmetry.max(ft.max_asymmetry);
            if let Some(e) = ft.min_eigenvalue {
                rep.min_eigenvalue = Some(rep.min_eigenvalue.map_or(e, |m: f64| m.min(e)));
            }
            seconds += ft.seconds;
            if cfg.record_trials {
                let rmse = |sq: &[f64], c: usize| sq.iter().map(|s| (s / c.max(1) as f64).sqrt()).collect();
                rep.trial_curves.push(TrialCurve {
                    trial,
                    magnitude: rmse(&ft.magnitude_sq, mags),
                    phase: rmse(&ft.phase_sq, phases),
                });
            }
        }
        rep.magnitude = mag.finish();
        rep.phase = pha.finish();
        rep.mean_iterations = if rep.updates > 0 { iter_sum as f64 / rep.updates as f64 } else { 0.0 };
        let steps = rep.trials * horizon;
        timing.push(Timing {
            label: spec.label.clone(),
            steps,
            seconds,
            seconds_per_step: if steps > 0 { seconds / steps as f64 } else { 0.0 },
        });
        reports.push(rep);
    }

    let report = Report {
        case: case.name.clone(),
        case_sha256: case.sha256.clone(),
        scenario: cfg.scenario.name.clone(),
        seed: cfg.seed,
        trials,
        horizon,
        data_sha256: data_hash.finalize().iter().map(|b| format!("{b:02x}")).collect(),
        filters: reports,
    };
    Ok(Outcome { report, timing })
}

/// One row of a cross-filter comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub case: String,
    pub label: String,
    pub magnitude: f64,
    pub phase: f64,
    /// Phase-ARMSE improvement over the baseline filter, in percent.
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub formula: String,
    pub rows: Vec<ComparisonRow>,
}

/// Scalar ARMSE per filter and case, sorted ascending by phase ARMSE within
/// each case. Reports for the same case must share their data hash.
pub fn compare_report(reports: &[Report], baseline: &str) -> Result<Comparison> {
    let mut cases: Vec<(&str, &str, Vec<&FilterReport>)> = Vec::new();
    for r in reports {
        match cases.iter_mut().find(|(c, _, _)| *c == r.case) {
            Some((_, hash, filters)) => {
                if *hash != r.data_sha256 {
                    return Err(Error::Mismatch(format!("{} reports were run on different data", r.case)));
                }
                for f in &r.filters {
                    if filters.iter().any(|g| g.label == f.label) {
                        return Err(Error::Mismatch(format!("{} appears twice for {}", f.label, r.case)));
                    }
                    filters.push(f);
                }
            }
            None => cases.push((&r.case, &r.data_sha256, r.filters.iter().collect())),
        }
    }
    let mut rows = Vec::new();
    for (case, _, mut filters) in cases {
        let base = filters
            .iter()
            .find(|f| f.label == baseline)
            .ok_or_else(|| Error::Mismatch(format!("baseline {baseline} missing for {case}")))?
            .phase
            .scalar;
        filters.sort_by(|a, b| a.phase.scalar.total_cmp(&b.phase.scalar));
        rows.extend(filters.into_iter().map(|f| ComparisonRow {
            case: case.to_string(),
            label: f.label.clone(),
            magnitude: f.magnitude.scalar,
            phase: f.phase.scalar,
            improvement: improvement(base, f.phase.scalar),
        }));
    }
    Ok(Comparison { baseline: baseline.to_string(), formula: IMPROVEMENT_FORMULA.to_string(), rows })
}

/// Penalty returned when a candidate makes the filter fail on any seed.
pub const TUNING_PENALTY: f64 = 1e6;

/// Reduced-fidelity ARMSE objective over a fixed list of seeds.
#[derive(Debug, Clone)]
pub struct TuningObjective<'a> {
    case: &'a Case,
    base: FilterSpec,
    space: dse_core::metaheuristics::CoefficientSpace,
    holt: HoltSpec,
    initial_variance: f64,
    data: Vec<TrialData>,
}

impl<'a> TuningObjective<'a> {
    /// Trial `k` is drawn from master seed `seeds[k]`, trial index 0, with
    /// the scenario's horizon.
    pub fn new(
        case: &'a Case,
        base: FilterSpec,
        space: dse_core::metaheuristics::CoefficientSpace,
        scenario: &ScenarioSpec,
        seeds: &[u64],
        initial_variance: f64,
        holt: HoltSpec,
    ) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Config("tuning needs at least one seed".into()));
        }
        let data = seeds.iter().map(|&s| TrialData::generate(case, scenario, s, 0)).collect::<Result<_>>()?;
        Ok(Self { case, base, space, holt, initial_variance, data })
    }

    pub fn space(&self) -> &dse_core::metaheuristics::CoefficientSpace {
        &self.space
    }

    /// Magnitude plus phase scalar ARMSE of `spec` over the fixed trials.
    pub fn score(&self, spec: &FilterSpec) -> f64 {
        let (n, m) = (self.case.system.state_dim(), self.case.plan.len());
        let Ok(cfg) = spec.filter_config(n, m) else { return TUNING_PENALTY };
        let layout = self.case.system.layout();
        let horizon = self.data[0].truth.len();
        let mut mag = ArmseAccumulator::new(horizon, layout.bus_count);
        let mut pha = ArmseAccumulator::new(horizon, layout.phase_count());
        for d in &self.data {
            match run_trial_filter(self.case, &cfg, self.holt, self.initial_variance, d) {
                Ok(ft) if mag.add_squared_errors(&ft.magnitude_sq).is_ok() && pha.add_squared_errors(&ft.phase_sq).is_ok() => {}
                _ => return TUNING_PENALTY,
            }
        }
        let v = mag.finish().scalar + pha.finish().scalar;
        if v.is_finite() {
            v
        } else {
            TUNING_PENALTY
        }
    }

    /// Filter spec for coefficient vector `w`; errors outside the box.
    pub fn candidate(&self, w: &[f64]) -> Result<FilterSpec> {
        if !self.space.bounds.contains(w) {
            return Err(Error::Config(format!("candidate {w:?} lies outside the search box")));
        }
        let (ut, kernel) = self.space.decode(w)?;
        Ok(FilterSpec {
            alpha: ut.alpha,
            beta: ut.beta,
            lambda: ut.lambda,
            kernel: kernel.as_ref().map(crate::config::KernelSpec::of),
            ..self.base.clone()
        })
    }

    pub fn try_evaluate(&self, w: &[f64]) -> Result<f64> {
        Ok(self.score(&self.candidate(w)?))
    }
}

impl dse_core::metaheuristics::Objective for TuningObjective<'_> {
    fn evaluate(&self, x: &[f64]) -> Option<f64> {
        self.try_evaluate(x).ok()
    }

    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Option<f64>> {
        xs.par_iter().map(|x| self.evaluate(x)).collect()
    }
}
