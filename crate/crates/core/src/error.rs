use crate::prelude::*;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid unscented scale: n + zeta = {0} must be positive")]
    InvalidScale(f64),

    #[error("cholesky decomposition failed after jitter (min eigenvalue {min_eigenvalue:e})")]
    Decomposition { min_eigenvalue: f64 },

    #[error("kernel parameter must be positive, got {0}")]
    KernelDomain(f64),

    #[error("invalid kernel mixture: {0}")]
    InvalidMixture(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("branch {index} has zero series impedance")]
    ZeroImpedance { index: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("admittance matrix has not been built")]
    AdmittanceMissing,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("voltage magnitude of bus {bus} reached {value} at step {step}")]
    NonPositiveMagnitude { bus: usize, step: usize, value: f64 },

    #[error("unknown benchmark function `{0}`")]
    UnknownFunction(String),

    #[error("unknown scenario preset `{0}`")]
    UnknownPreset(String),

    #[error("estimate diverged: {0}")]
    Divergence(String),

    #[error("every objective evaluation failed")]
    AllEvaluationsFailed,

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep { step, source: Box::new(self) }
    }
}
