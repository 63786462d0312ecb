//! Serializable experiment configuration.
//!
//! Every field is materialized when written, so a saved configuration or
//! manifest determines a run without consulting built-in defaults.

use crate::error::{io_error, Error, Result};
use dse_core::correntropy::{KernelFamily, KernelMixture};
use dse_core::filters::{
    FilterConfig, Variant, DEFAULT_INITIAL_VARIANCE, DEFAULT_MAX_ITERATIONS, DEFAULT_MEASUREMENT_VARIANCE,
    DEFAULT_PROCESS_VARIANCE, DEFAULT_TOLERANCE,
};
use dse_core::grid::HoltState;
use dse_core::scenarios::{ScenarioSpec, PRESETS};
use dse_core::unscented::UTConfig;
use dse_core::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Kernel mixture in file form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub weights: Vec<f64>,
    pub shapes: Vec<f64>,
}

impl KernelSpec {
    pub fn of(mix: &KernelMixture) -> Self {
        Self {
            family: mix.family(),
            weights: mix.components().iter().map(|c| c.weight).collect(),
            shapes: mix.shapes(),
        }
    }

    pub fn mixture(&self) -> Result<KernelMixture> {
        Ok(KernelMixture::from_pairs(self.family, &self.weights, &self.shapes)?)
    }
}

/// One filter of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    /// Report label; defaults to the variant name.
    pub label: String,
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `Q = q I_n`.
    pub process_variance: f64,
    /// `R = r I_m`.
    pub measurement_variance: f64,
}

impl FilterSpec {
    /// Standard coefficients for `variant`.
    pub fn defaults(variant: Variant) -> Self {
        let ut = UTConfig::default();
        Self {
            label: variant.name().to_string(),
            variant,
            alpha: ut.alpha,
            beta: ut.beta,
            lambda: ut.lambda,
            kernel: variant.default_kernel().as_ref().map(KernelSpec::of),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            process_variance: DEFAULT_PROCESS_VARIANCE,
            measurement_variance: DEFAULT_MEASUREMENT_VARIANCE,
        }
    }

    /// Comma-separated variant names such as `ukf,ckmmc`.
    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        let mut out: Vec<Self> = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let variant: Variant = name.parse().map_err(|e| Error::Config(format!("--filters: {e}")))?;
            if out.iter().any(|f| f.variant == variant) {
                return Err(Error::Config(format!("--filters: {variant} listed twice")));
            }
            out.push(Self::defaults(variant));
        }
        if out.is_empty() {
            return Err(Error::Config("--filters: no filters given".into()));
        }
        Ok(out)
    }

    pub fn ut(&self) -> UTConfig {
        UTConfig::new(self.alpha, self.beta, self.lambda)
    }

    pub fn filter_config(&self, n: usize, m: usize) -> Result<FilterConfig> {
        let mut cfg = FilterConfig::defaults(self.variant, n, m).with_ut(self.ut());
        cfg.kernel = self.kernel.as_ref().map(KernelSpec::mixture).transpose()?;
        cfg.tolerance = self.tolerance;
        cfg.max_iterations = self.max_iterations;
        cfg.process_cov = DMatrix::identity(n, n) * self.process_variance;
        cfg.measurement_cov = DMatrix::identity(m, m) * self.measurement_variance;
        cfg.validate().map_err(|e| Error::Config(format!("filter {}: {e}", self.label)))?;
        Ok(cfg)
    }

    /// Copy with tuned coefficients, labelled `BWB-<label>` style by the caller.
    pub fn with_coefficients(&self, label: &str, coeffs: &Coefficients) -> Result<Self> {
        if coeffs.variant != self.variant {
            return Err(Error::Config(format!("coefficients are for {}, filter is {}", coeffs.variant, self.variant)));
        }
        Ok(Self {
            label: label.to_string(),
            alpha: coeffs.alpha,
            beta: coeffs.beta,
            lambda: coeffs.lambda,
            kernel: coeffs.kernel.clone(),
            ..self.clone()
        })
    }
}

/// Tuned coefficients as written by `dse tune` and read by `--coeffs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Reduced-fidelity objective value reached by the tuner.
    pub objective: f64,
}

impl Coefficients {
    pub fn read(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    /// Applies these coefficients to the variant's defaults with the given label.
    pub fn filter(&self, label: &str) -> Result<FilterSpec> {
        FilterSpec::defaults(self.variant).with_coefficients(label, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoltSpec {
    pub upsilon: f64,
    pub theta: f64,
}

impl Default for HoltSpec {
    fn default() -> Self {
        Self { upsilon: HoltState::DEFAULT_UPSILON, theta: HoltState::DEFAULT_THETA }
    }
}

/// A complete Monte-Carlo experiment. Trials and horizon come from the
/// scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Bundled case name or case file path.
    pub case: String,
    pub seed: u64,
    /// `P_{0|0} = p I_n`; the initial estimate is drawn from `N(x_0, P_{0|0})`.
    pub initial_variance: f64,
    #[serde(default)]
    pub holt: HoltSpec,
    /// Keep per-trial error curves in the report.
    #[serde(default)]
    pub record_trials: bool,
    /// Record the smallest posterior eigenvalue of every update.
    #[serde(default)]
    pub check_covariance: bool,
    pub scenario: ScenarioSpec,
    pub filters: Vec<FilterSpec>,
}

impl ExperimentConfig {
    pub fn new(case: &str, scenario: ScenarioSpec, filters: Vec<FilterSpec>, seed: u64) -> Self {
        Self {
            case: case.to_string(),
            seed,
            initial_variance: DEFAULT_INITIAL_VARIANCE,
            holt: HoltSpec::default(),
            record_trials: false,
            check_covariance: false,
            scenario,
            filters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate().map_err(|e| Error::Config(format!("scenario {}: {e}", self.scenario.name)))?;
        if self.filters.is_empty() {
            return Err(Error::Config("experiment has no filters".into()));
        }
        if !(self.initial_variance > 0.0) {
            return Err(Error::Config(format!("initial_variance {} must be positive", self.initial_variance)));
        }
        for (name, v) in [("upsilon", self.holt.upsilon), ("theta", self.holt.theta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("holt {name} = {v} must lie in (0, 1)")));
            }
        }
        for (i, f) in self.filters.iter().enumerate() {
            if self.filters[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::Config(format!("duplicate filter label `{}`", f.label)));
            }
        }
        Ok(())
    }
}

/// A preset name or a scenario TOML file.
pub fn load_scenario(spec: &str) -> Result<ScenarioSpec> {
    if PRESETS.contains(&spec) {
        return Ok(ScenarioSpec::preset(spec)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Config(format!(
            "scenario `{spec}` is neither a file nor one of {}",
            PRESETS.join(", ")
        )));
    }
    let s: ScenarioSpec = read_toml(path)?;
    s.validate().map_err(|e| Error::ConfigFile { path: path.into(), message: e.to_string() })?;
    Ok(s)
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    toml::from_str(&text).map_err(|e| Error::ConfigFile { path: path.into(), message: e.to_string() })
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Config(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(io_error(path))
}
