//! Correntropy kernels, the Cauchy kernel mixture and fixed-point weights.

use crate::prelude::*;
use crate::{DVector, Error, Result};

/// Lower bound applied to every fixed-point weight.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Tolerance on `Σ δ_j = 1`.
const MIXTURE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum KernelFamily {
    Cauchy,
    Gaussian,
}

/// `1 / (1 + e²/σ)`.
pub fn cauchy_kernel(e: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::KernelDomain(sigma));
    }
    Ok(cauchy(e, sigma))
}

/// `exp(−e² / (2η²))`.
pub fn gaussian_kernel(e: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::KernelDomain(eta));
    }
    Ok(gaussian(e, eta))
}

#[inline]
fn cauchy(e: f64, sigma: f64) -> f64 {
    1.0 / (1.0 + e * e / sigma)
}

#[inline]
fn gaussian(e: f64, eta: f64) -> f64 {
    (-(e * e) / (2.0 * eta * eta)).exp()
}

/// One `(δ, σ)` pair of a mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelComponent {
    pub weight: f64,
    pub shape: f64,
}

/// A convex combination of kernels of one family.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KernelMixture {
    family: KernelFamily,
    components: Vec<KernelComponent>,
}

impl KernelMixture {
    pub fn new(family: KernelFamily, components: Vec<KernelComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMixture("mixture needs at least one kernel".into()));
        }
        let mut total = 0.0;
        for (j, c) in components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::InvalidMixture(format!("coefficient {j} = {} outside (0, 1]", c.weight)));
            }
            if !(c.shape > 0.0) || !c.shape.is_finite() {
                return Err(Error::KernelDomain(c.shape));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > MIXTURE_SUM_TOL {
            return Err(Error::InvalidMixture(format!("coefficients sum to {total}, expected 1")));
        }
        Ok(Self { family, components })
    }

    /// Builds a mixture from parallel coefficient and shape slices.
    pub fn from_pairs(family: KernelFamily, weights: &[f64], shapes: &[f64]) -> Result<Self> {
        if weights.len() != shapes.len() {
            return Err(Error::InvalidMixture(format!(
                "{} coefficients but {} shapes",
                weights.len(),
                shapes.len()
            )));
        }
        let comps = weights
            .iter()
            .zip(shapes)
            .map(|(&weight, &shape)| KernelComponent { weight, shape })
            .collect();
        Self::new(family, comps)
    }

    pub fn cauchy(sigma: f64) -> Result<Self> {
        Self::from_pairs(KernelFamily::Cauchy, &[1.0], &[sigma])
    }

    pub fn gaussian(eta: f64) -> Result<Self> {
        Self::from_pairs(KernelFamily::Gaussian, &[1.0], &[eta])
    }

    /// Equal coefficients over the given Cauchy shapes.
    pub fn uniform_cauchy(shapes: &[f64]) -> Result<Self> {
        let w = vec![1.0 / shapes.len().max(1) as f64; shapes.len()];
        Self::from_pairs(KernelFamily::Cauchy, &w, shapes)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn components(&self) -> &[KernelComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn shapes(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.shape).collect()
    }

    /// Copy with the shapes replaced, coefficients kept.
    pub fn with_shapes(&self, shapes: &[f64]) -> Result<Self> {
        let weights: Vec<f64> = self.components.iter().map(|c| c.weight).collect();
        Self::from_pairs(self.family, &weights, shapes)
    }
}

/// `Σ δ_j κ(e, σ_j)`.
pub fn mixture_score(e: f64, mix: &KernelMixture) -> f64 {
    let k: fn(f64, f64) -> f64 = match mix.family {
        KernelFamily::Cauchy => cauchy,
        KernelFamily::Gaussian => gaussian,
    };
    mix.components.iter().map(|c| c.weight * k(e, c.shape)).sum()
}

/// Mean mixture score over a residual vector.
pub fn cost(errors: &[f64], mix: &KernelMixture) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().map(|&e| mixture_score(e, mix)).sum::<f64>() / errors.len() as f64
}

/// Diagonal weight of the fixed-point iteration, floored at [`WEIGHT_FLOOR`].
///
/// Cauchy: `Σ δ_j / (σ_j (1 + e²/σ_j)²)`. Gaussian: `Σ δ_j exp(−e²/(2η_j²))`.
pub fn fixed_point_weight(e: f64, mix: &KernelMixture) -> f64 {
    let w: f64 = match mix.family {
        KernelFamily::Cauchy => mix
            .components
            .iter()
            .map(|c| {
                let d = 1.0 + e * e / c.shape;
                c.weight / (c.shape * d * d)
            })
            .sum(),
        KernelFamily::Gaussian => mix.components.iter().map(|c| c.weight * gaussian(e, c.shape)).sum(),
    };
    if w.is_nan() {
        WEIGHT_FLOOR
    } else {
        w.max(WEIGHT_FLOOR)
    }
}

/// Diagonal `Θ = diag(Θ_P, Θ_R)` of the whitened regression.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub diag: DVector<f64>,
    pub state_dim: usize,
}

impl WeightMatrix {
    pub fn state_part(&self) -> &[f64] {
        &self.diag.as_slice()[..self.state_dim]
    }

    pub fn measurement_part(&self) -> &[f64] {
        &self.diag.as_slice()[self.state_dim..]
    }
}

pub fn weight_matrix(errors: &DVector<f64>, mix: &KernelMixture, n: usize) -> Result<WeightMatrix> {
    if n > errors.len() {
        return Err(Error::Dimension(format!("state block {n} exceeds residual length {}", errors.len())));
    }
    Ok(WeightMatrix { diag: errors.map(|e| fixed_point_weight(e, mix)), state_dim: n })
}
