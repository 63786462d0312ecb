use super::{optimize, Algorithm, Bounds, Objective, OptimizeResult, SwarmConfig};
use crate::correntropy::{KernelFamily, KernelMixture};
use crate::prelude::*;
use crate::unscented::UTConfig;
use crate::{Error, Result};

pub const ALPHA_RANGE: (f64, f64) = (0.1, 2.0);
pub const BETA_RANGE: (f64, f64) = (0.0, 3.0);
pub const SHAPE_RANGE: (f64, f64) = (0.1, 20.0);

/// Search space `W = [α, β, σ₁ … σ_K]` over filter coefficients. The mixture
/// coefficients δ are held fixed; `K = 0` tunes only the unscented spread.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpace {
    pub family: KernelFamily,
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub bounds: Bounds,
}

impl CoefficientSpace {
    /// Default box for the given mixture coefficients.
    pub fn new(family: KernelFamily, weights: Vec<f64>) -> Self {
        let k = weights.len();
        let mut lower = vec![ALPHA_RANGE.0, BETA_RANGE.0];
        let mut upper = vec![ALPHA_RANGE.1, BETA_RANGE.1];
        lower.extend(core::iter::repeat_n(SHAPE_RANGE.0, k));
        upper.extend(core::iter::repeat_n(SHAPE_RANGE.1, k));
        Self { family, weights, lambda: 0.0, bounds: Bounds::new(lower, upper).expect("default box") }
    }

    /// Space matching an existing kernel (or none).
    pub fn for_kernel(kernel: Option<&KernelMixture>) -> Self {
        match kernel {
            Some(k) => Self::new(k.family(), k.components().iter().map(|c| c.weight).collect()),
            None => Self::new(KernelFamily::Cauchy, vec![]),
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        if bounds.dim() != self.dim() {
            return Err(Error::Dimension(format!("space has {} coefficients, bounds {}", self.dim(), bounds.dim())));
        }
        self.bounds = bounds;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        2 + self.weights.len()
    }

    pub fn encode(&self, ut: &UTConfig, kernel: Option<&KernelMixture>) -> Vec<f64> {
        let mut w = vec![ut.alpha, ut.beta];
        if let Some(k) = kernel {
            w.extend(k.shapes());
        }
        w.truncate(self.dim());
        w
    }

    pub fn decode(&self, w: &[f64]) -> Result<(UTConfig, Option<KernelMixture>)> {
        if w.len() != self.dim() {
            return Err(Error::Dimension(format!("expected {} coefficients, got {}", self.dim(), w.len())));
        }
        let ut = UTConfig::new(w[0], w[1], self.lambda);
        let kernel = if self.weights.is_empty() {
            None
        } else {
            Some(KernelMixture::from_pairs(self.family, &self.weights, &w[2..])?)
        };
        Ok((ut, kernel))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub coefficients: Vec<f64>,
    pub ut: UTConfig,
    pub kernel: Option<KernelMixture>,
    pub fitness: f64,
    /// Objective value of the incumbent, when one was supplied.
    pub incumbent_fitness: Option<f64>,
    pub run: OptimizeResult,
}

/// Minimizes `obj` over the coefficient box. The incumbent, when given, is
/// placed in the initial population, so the result never scores worse.
pub fn tune_coefficients<O: Objective + ?Sized>(
    obj: &O,
    space: &CoefficientSpace,
    alg: Algorithm,
    cfg: &SwarmConfig,
    seed: u64,
    incumbent: Option<&[f64]>,
) -> Result<TuneResult> {
    let initial: Vec<Vec<f64>> = incumbent.map(|w| vec![w.to_vec()]).unwrap_or_default();
    if let Some(w) = incumbent {
        if !space.bounds.contains(w) {
            return Err(Error::InvalidConfig(format!("incumbent {w:?} lies outside the search box")));
        }
    }
    let incumbent_fitness = incumbent.and_then(|w| obj.evaluate(w)).filter(|f| f.is_finite());
    let run = optimize(alg, obj, &space.bounds, cfg, seed, &initial)?;
    let (ut, kernel) = space.decode(&run.best)?;
    Ok(TuneResult { coefficients: run.best.clone(), ut, kernel, fitness: run.fitness, incumbent_fitness, run })
}
