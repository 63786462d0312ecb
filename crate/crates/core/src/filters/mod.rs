//! EKF, UKF and the correntropy-weighted UKF family.

mod run;
mod update;

pub use crate::linalg::pseudo_inverse;
pub use run::{ekf_step, filter_step, predict, run_filter, ukf_step, Prior, StepRecord, Trajectory, UpdateInfo};
pub use update::{
    build_regression, ckmmc_update, gain_form_estimate, joseph_update, normal_equation_estimate, RegressionModel, UpdateOutcome,
};

use crate::correntropy::{KernelFamily, KernelMixture};
use crate::prelude::*;
use crate::unscented::UTConfig;
use crate::{DMatrix, DVector, Error, Result};
use core::fmt;
use core::str::FromStr;

/// State transition `x_t = f(x_{t-1})` that may carry history.
pub trait Transition {
    fn dim(&self) -> usize;
    /// Forecast of `x` without changing the internal history.
    fn forecast(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// Moves the history one step forward given the latest estimate.
    fn advance(&mut self, x_prev: &DVector<f64>);
}

/// Measurement function `y = g(x)`.
pub trait Observation {
    fn dim(&self) -> usize;
    fn observe(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

impl<O: Observation + ?Sized> Observation for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn observe(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).observe(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian(x)
    }
}

/// `f(x) = A x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTransition {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LinearTransition {
    pub fn identity(n: usize) -> Self {
        Self { a: DMatrix::identity(n, n), b: DVector::zeros(n) }
    }
}

impl Transition for LinearTransition {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn forecast(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }
    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
    fn advance(&mut self, _x_prev: &DVector<f64>) {}
}

/// `g(x) = H x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObservation {
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl LinearObservation {
    pub fn new(h: DMatrix<f64>) -> Self {
        let c = DVector::zeros(h.nrows());
        Self { h, c }
    }
}

impl Observation for LinearObservation {
    fn dim(&self) -> usize {
        self.h.nrows()
    }
    fn observe(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x + &self.c
    }
    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.h.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Variant {
    #[cfg_attr(feature = "serde", serde(rename = "EKF"))]
    Ekf,
    #[cfg_attr(feature = "serde", serde(rename = "UKF"))]
    Ukf,
    #[cfg_attr(feature = "serde", serde(rename = "MCC-UKF"))]
    MccUkf,
    #[cfg_attr(feature = "serde", serde(rename = "CKMC-UKF"))]
    CkmcUkf,
    #[cfg_attr(feature = "serde", serde(rename = "CKMMC-UKF"))]
    CkmmcUkf,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Ekf, Variant::Ukf, Variant::MccUkf, Variant::CkmcUkf, Variant::CkmmcUkf];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ekf => "EKF",
            Variant::Ukf => "UKF",
            Variant::MccUkf => "MCC-UKF",
            Variant::CkmcUkf => "CKMC-UKF",
            Variant::CkmmcUkf => "CKMMC-UKF",
        }
    }

    /// Whether the update runs the weighted fixed-point loop.
    pub fn is_robust(self) -> bool {
        matches!(self, Variant::MccUkf | Variant::CkmcUkf | Variant::CkmmcUkf)
    }

    /// Default kernel: Gaussian η = 5, Cauchy σ = 1.8, and the two-kernel
    /// mixture δ = (0.5, 0.5), σ = (1.5, 1.5).
    pub fn default_kernel(self) -> Option<KernelMixture> {
        let mix = match self {
            Variant::Ekf | Variant::Ukf => return None,
            Variant::MccUkf => KernelMixture::gaussian(5.0),
            Variant::CkmcUkf => KernelMixture::cauchy(1.8),
            Variant::CkmmcUkf => KernelMixture::from_pairs(KernelFamily::Cauchy, &[0.5, 0.5], &[1.5, 1.5]),
        };
        Some(mix.expect("default kernels are valid"))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "ekf" => Variant::Ekf,
            "ukf" => Variant::Ukf,
            "mccukf" | "mcc" => Variant::MccUkf,
            "ckmcukf" | "ckmc" => Variant::CkmcUkf,
            "ckmmcukf" | "ckmmc" => Variant::CkmmcUkf,
            _ => return Err(Error::InvalidConfig(format!("unknown filter variant `{s}`"))),
        })
    }
}

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;
pub const DEFAULT_PROCESS_VARIANCE: f64 = 1e-5;
pub const DEFAULT_MEASUREMENT_VARIANCE: f64 = 1e-2;
pub const DEFAULT_INITIAL_VARIANCE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub variant: Variant,
    pub ut: UTConfig,
    /// Required for the robust variants, ignored otherwise.
    pub kernel: Option<KernelMixture>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub process_cov: DMatrix<f64>,
    pub measurement_cov: DMatrix<f64>,
    /// Computes the posterior minimum eigenvalue after every step.
    pub check_covariance: bool,
}

impl FilterConfig {
    /// Default coefficients for `variant` with `Q = 1e-5 I_n`, `R = 1e-2 I_m`.
    pub fn defaults(variant: Variant, n: usize, m: usize) -> Self {
        Self {
            variant,
            ut: UTConfig::default(),
            kernel: variant.default_kernel(),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            process_cov: DMatrix::identity(n, n) * DEFAULT_PROCESS_VARIANCE,
            measurement_cov: DMatrix::identity(m, m) * DEFAULT_MEASUREMENT_VARIANCE,
            check_covariance: false,
        }
    }

    pub fn with_kernel(mut self, kernel: KernelMixture) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn with_ut(mut self, ut: UTConfig) -> Self {
        self.ut = ut;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.process_cov.nrows()
    }

    pub fn measurement_dim(&self) -> usize {
        self.measurement_cov.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        for (name, m) in [("process", &self.process_cov), ("measurement", &self.measurement_cov)] {
            if !m.is_square() {
                return Err(Error::Dimension(format!("{name} covariance is not square")));
            }
            if crate::linalg::asymmetry(m) > 1e-12 * (1.0 + m.amax()) {
                return Err(Error::InvalidConfig(format!("{name} covariance is not symmetric")));
            }
            if m.diagonal().iter().any(|&d| !(d > 0.0)) {
                return Err(Error::InvalidConfig(format!("{name} covariance needs a positive diagonal")));
            }
        }
        if self.variant.is_robust() && self.kernel.is_none() {
            return Err(Error::InvalidConfig(format!("{} needs a kernel mixture", self.variant)));
        }
        if self.variant != Variant::Ekf {
            self.ut.zeta(self.state_dim())?;
        }
        Ok(())
    }
}

/// Posterior of one step together with the transition history.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState<T> {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub transition: T,
}

impl<T: Transition> FilterState<T> {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, transition: T) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n || transition.dim() != n {
            return Err(Error::Dimension(format!(
                "mean {n}, covariance {}x{}, transition {}",
                cov.nrows(),
                cov.ncols(),
                transition.dim()
            )));
        }
        Ok(Self { mean, cov, transition })
    }
}
